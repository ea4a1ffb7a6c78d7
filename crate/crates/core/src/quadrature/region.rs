use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use super::gauss::gauss_legendre;
use super::{QuadError, QuadratureSpec};
use crate::geometry::{rect_disk_area, Disk, Region, Vec2};

/// No cell is split below this depth.
const MAX_DEPTH: u32 = 14;

#[derive(Debug, Clone, Copy)]
struct Cell {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    depth: u32,
    value: Complex64,
    err: f64,
}

struct Key(f64, usize);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

enum Overlap {
    Inside,
    Outside,
    Straddles,
}

fn classify(c: &Cell, disk: Option<Disk>) -> Overlap {
    let Some(d) = disk else {
        return Overlap::Inside;
    };
    let (px, py) = (d.center.x, d.center.y);
    let near = ((c.x0 - px).max(0.0).max(px - c.x1)).hypot((c.y0 - py).max(0.0).max(py - c.y1));
    let far = ((c.x0 - px).abs().max((c.x1 - px).abs())).hypot((c.y0 - py).abs().max((c.y1 - py).abs()));
    if far <= d.radius {
        Overlap::Inside
    } else if near >= d.radius {
        Overlap::Outside
    } else {
        Overlap::Straddles
    }
}

/// `∫_region f(x) dx` by globally adaptive tensor Gauss–Legendre cubature on
/// a quadtree. Cells crossing the clip arc are integrated as (mean of `f`
/// over nodes inside the disk) × (exact clipped cell area), which is exact
/// for constants and first order otherwise, so clipped integrals converge
/// slowly; keep their tolerances modest.
pub fn integrate_region<F>(f: F, region: &Region, spec: &QuadratureSpec) -> Result<Complex64, QuadError>
where
    F: Fn(Vec2) -> Complex64,
{
    spec.validate()?;
    let fine = gauss_legendre(spec.panel_order);
    let coarse = gauss_legendre((spec.panel_order / 2).max(1));
    let disk = region.clip();
    if disk.is_some_and(|d| d.radius <= 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let tensor = |c: &Cell, rule: &super::GaussRule, indicator: bool| -> (Complex64, f64) {
        let (mx, hx) = (0.5 * (c.x0 + c.x1), 0.5 * (c.x1 - c.x0));
        let (my, hy) = (0.5 * (c.y0 + c.y1), 0.5 * (c.y1 - c.y0));
        let mut sum = Complex64::new(0.0, 0.0);
        let mut wsum = 0.0;
        for (&xi, &wi) in rule.nodes.iter().zip(&rule.weights) {
            for (&yj, &wj) in rule.nodes.iter().zip(&rule.weights) {
                let p = Vec2::new(mx + hx * xi, my + hy * yj);
                if indicator {
                    let d = disk.expect("indicator needs a disk");
                    if (p - d.center).norm_sq() > d.radius * d.radius {
                        continue;
                    }
                }
                sum += f(p) * (wi * wj);
                wsum += wi * wj;
            }
        }
        (sum * (hx * hy), wsum)
    };

    let evaluate = |c: &mut Cell| {
        match classify(c, disk) {
            Overlap::Outside => {
                c.value = Complex64::new(0.0, 0.0);
                c.err = 0.0;
            }
            Overlap::Inside => {
                let (v, _) = tensor(c, fine, false);
                let (w, _) = tensor(c, coarse, false);
                c.value = v;
                c.err = (v - w).norm();
            }
            Overlap::Straddles => {
                let d = disk.expect("straddling needs a disk");
                let clipped = rect_disk_area(
                    c.x0 - d.center.x,
                    c.x1 - d.center.x,
                    c.y0 - d.center.y,
                    c.y1 - d.center.y,
                    d.radius,
                );
                let cell_area = (c.x1 - c.x0) * (c.y1 - c.y0);
                // (hx·hy)·Σw f over inside nodes, rescaled to mean × clipped area
                let cell = *c;
                let clipped_mean = |rule| {
                    let (s, wsum) = tensor(&cell, rule, true);
                    (wsum > 0.0).then(|| s * (4.0 * clipped / (cell_area * wsum)))
                };
                let v = clipped_mean(fine).unwrap_or_default();
                c.value = v;
                c.err = match clipped_mean(coarse) {
                    Some(w) => (v - w).norm(),
                    None => v.norm(),
                };
            }
        }
    };

    let mut cells: Vec<Cell> = Vec::new();
    let mut live: Vec<bool> = Vec::new();
    let mut heap = BinaryHeap::new();
    for sq in region.squares() {
        let (x0, x1, y0, y1) = sq.bounds();
        let mut c = Cell {
            x0,
            x1,
            y0,
            y1,
            depth: 0,
            value: Complex64::new(0.0, 0.0),
            err: 0.0,
        };
        evaluate(&mut c);
        heap.push(Key(c.err, cells.len()));
        cells.push(c);
        live.push(true);
    }

    loop {
        let (value, error) = cells
            .iter()
            .zip(&live)
            .filter(|(_, &l)| l)
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), (c, _)| {
                (v + c.value, e + c.err)
            });
        if error <= spec.abs_tol.max(spec.rel_tol * value.norm()) {
            return Ok(value);
        }
        if cells.len() + 4 > spec.max_panels {
            return Err(QuadError::ToleranceNotReached { estimate: value, error });
        }
        // cells at the depth cap keep their error but are never split again
        let next = std::iter::from_fn(|| heap.pop()).find(|Key(_, i)| cells[*i].depth < MAX_DEPTH);
        let Some(Key(_, idx)) = next else {
            return Err(QuadError::ToleranceNotReached { estimate: value, error });
        };
        let c = cells[idx];
        live[idx] = false;
        let (mx, my) = (0.5 * (c.x0 + c.x1), 0.5 * (c.y0 + c.y1));
        for (x0, x1, y0, y1) in [
            (c.x0, mx, c.y0, my),
            (mx, c.x1, c.y0, my),
            (c.x0, mx, my, c.y1),
            (mx, c.x1, my, c.y1),
        ] {
            let mut child = Cell {
                x0,
                x1,
                y0,
                y1,
                depth: c.depth + 1,
                value: Complex64::new(0.0, 0.0),
                err: 0.0,
            };
            evaluate(&mut child);
            heap.push(Key(child.err, cells.len()));
            cells.push(child);
            live.push(true);
        }
    }
}
