//! Exact hypervolume for up to three objectives by dimension sweep.
//!
//! 3-D: sweep along the last axis, keeping the 2-D staircase of everything
//! seen so far; each slab adds `area(staircase) × thickness`. O(n²).

use super::pareto::{dominates, lex_cmp, pareto_filter};
use crate::error::{Error, Result};

/// Hypervolume of `points` w.r.t. `reference` (all-minimize). Every point
/// must be strictly below the reference in all coordinates.
pub fn hypervolume<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> Result<f64> {
    let d = reference.len();
    if d == 0 || d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != d || p.iter().zip(reference).any(|(x, r)| !(x < r)) {
            return Err(Error::NotDominatingReference { index: i });
        }
    }
    Ok(hv_inside(points, reference))
}

/// Same as [`hypervolume`] but silently ignores points that do not dominate
/// the reference.
pub fn hypervolume_clipped<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> f64 {
    let inside: Vec<&[f64]> = points
        .iter()
        .map(|p| p.as_ref())
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x < r))
        .collect();
    hv_inside(&inside, reference)
}

fn hv_inside<P: AsRef<[f64]>>(points: &[P], reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let front: Vec<&[f64]> = pareto_filter(points).into_iter().map(|i| points[i].as_ref()).collect();
    match reference.len() {
        1 => reference[0] - front.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => hv2(front.iter().map(|p| (p[0], p[1])).collect(), reference[0], reference[1]),
        3 => hv3(&front, reference),
        _ => unreachable!("checked by callers"),
    }
}

/// Area of a set of 2-D points; need not be mutually nondominated.
fn hv2(mut pts: Vec<(f64, f64)>, rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let mut area = 0.0;
    let mut best_y = ry;
    for (x, y) in pts {
        if y < best_y {
            area += (rx - x) * (best_y - y);
            best_y = y;
        }
    }
    area
}

fn hv3(front: &[&[f64]], r: &[f64]) -> f64 {
    let mut pts: Vec<&[f64]> = front.to_vec();
    pts.sort_by(|a, b| a[2].partial_cmp(&b[2]).unwrap().then_with(|| lex_cmp(a, b)));
    // Staircase sorted by x ascending with y strictly descending.
    let mut stair: Vec<(f64, f64)> = Vec::new();
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        insert_stair(&mut stair, p[0], p[1]);
        let z_next = if i + 1 < pts.len() { pts[i + 1][2] } else { r[2] };
        let dz = z_next - p[2];
        if dz > 0.0 {
            volume += stair_area(&stair, r[0], r[1]) * dz;
        }
    }
    volume
}

fn insert_stair(stair: &mut Vec<(f64, f64)>, x: f64, y: f64) {
    // Dominated (or equal) in 2-D by an existing step: nothing to add.
    if stair.iter().any(|&(sx, sy)| sx <= x && sy <= y) {
        return;
    }
    stair.retain(|&(sx, sy)| !(x <= sx && y <= sy));
    let pos = stair.partition_point(|&(sx, _)| sx < x);
    stair.insert(pos, (x, y));
}

fn stair_area(stair: &[(f64, f64)], rx: f64, ry: f64) -> f64 {
    let mut area = 0.0;
    for (i, &(x, y)) in stair.iter().enumerate() {
        let x_next = stair.get(i + 1).map_or(rx, |s| s.0);
        area += (x_next - x) * (ry - y);
    }
    area
}

/// Volume that `p` adds to `front`: `HV(front ∪ {p}) - HV(front)`. Zero when
/// `p` is weakly dominated by the front or lies outside the reference box.
pub fn exclusive_contribution<P: AsRef<[f64]>>(p: &[f64], front: &[P], reference: &[f64]) -> f64 {
    if p.iter().zip(reference).any(|(x, r)| !(x < r)) {
        return 0.0;
    }
    let mut boxv = 1.0;
    for (x, r) in p.iter().zip(reference) {
        boxv *= r - x;
    }
    let mut limited: Vec<Vec<f64>> = Vec::with_capacity(front.len());
    for q in front {
        let q = q.as_ref();
        if q.iter().zip(p).all(|(a, b)| a <= b) {
            return 0.0;
        }
        let m: Vec<f64> = q.iter().zip(p).map(|(a, b)| a.max(*b)).collect();
        if m.iter().zip(reference).all(|(x, r)| x < r) {
            limited.push(m);
        }
    }
    (boxv - hv_inside(&limited, reference)).max(0.0)
}

/// Exclusive contribution of each front member (leave-one-out).
pub fn contributions<P: AsRef<[f64]>>(front: &[P], reference: &[f64]) -> Vec<f64> {
    (0..front.len())
        .map(|i| {
            let rest: Vec<&[f64]> =
                front.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q.as_ref()).collect();
            let p = front[i].as_ref();
            if rest.iter().any(|q| dominates(q, p)) {
                0.0
            } else {
                exclusive_contribution(p, &rest, reference)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(hypervolume(&[[0.0, 0.0]], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(hypervolume(&[[0.0, 0.5], [0.5, 0.0]], &[1.0, 1.0]).unwrap(), 0.75);
        assert_eq!(hypervolume(&[[0.5]], &[2.0]).unwrap(), 1.5);
        let cube = hypervolume(&[[0.0, 0.0, 0.0]], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cube, 6.0);
    }

    #[test]
    fn three_d_inclusion_exclusion() {
        let pts = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
        // Each box 0.25, pairwise overlaps 0.125, triple overlap 0.125.
        let v = hypervolume(&pts, &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - (3.0 * 0.25 - 3.0 * 0.125 + 0.125)).abs() < 1e-15);
    }

    #[test]
    fn reference_violation_is_an_error() {
        assert!(matches!(
            hypervolume(&[[0.0, 0.0], [1.0, 0.5]], &[1.0, 1.0]),
            Err(Error::NotDominatingReference { index: 1 })
        ));
        assert!(matches!(hypervolume(&[[0.0; 4]], &[1.0; 4]), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn contribution_matches_difference() {
        let front = [[0.1, 0.6, 0.4], [0.5, 0.2, 0.3], [0.7, 0.7, 0.05]];
        let r = [1.0, 1.0, 1.0];
        let p = [0.3, 0.3, 0.2];
        let base = hypervolume(&front, &r).unwrap();
        let mut with: Vec<[f64; 3]> = front.to_vec();
        with.push(p);
        let full = hypervolume(&with, &r).unwrap();
        assert!((exclusive_contribution(&p, &front, &r) - (full - base)).abs() < 1e-12);
        assert_eq!(exclusive_contribution(&[0.6, 0.7, 0.5], &front, &r), 0.0);
    }
}
