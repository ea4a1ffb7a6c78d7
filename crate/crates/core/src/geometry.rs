//! Room floor, reflection-image rings and the planar regions every spatial
//! integral runs over.
//!
//! The room is the square `S(0, a)` of half-side `a` centred at the origin.
//! Reflection images of order `k` live in the ring `F_k`, the union of the
//! `4k` room-sized squares whose lattice offset `2a·(i, j)` has `|i| + |j| = k`.
//! The rings for `k = 0, 1, 2, ...` tile the plane.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("square half-side must be positive, got {0}")]
    NonPositiveHalfSide(f64),
    #[error("user location ({0}, {1}) lies outside the room of half-side {2}")]
    UserOutsideRoom(f64, f64, f64),
    #[error("SINR threshold {0} is below 1; the coverage identity requires tau >= 1")]
    ThresholdBelowOne(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A point or displacement in the floor plane (metres).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Closed axis-aligned square `S(center, half_side)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    center: Vec2,
    half_side: f64,
}

impl Square {
    pub fn new(center: Vec2, half_side: f64) -> Result<Self, GeometryError> {
        if !(half_side > 0.0) || !half_side.is_finite() {
            return Err(GeometryError::NonPositiveHalfSide(half_side));
        }
        Ok(Square { center, half_side })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn half_side(&self) -> f64 {
        self.half_side
    }

    /// `(x0, x1, y0, y1)` bounds.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let a = self.half_side;
        (
            self.center.x - a,
            self.center.x + a,
            self.center.y - a,
            self.center.y + a,
        )
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_side * self.half_side
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (p.x - self.center.x).abs().max((p.y - self.center.y).abs()) <= self.half_side
    }

    pub fn translated(&self, by: Vec2) -> Square {
        Square {
            center: self.center + by,
            half_side: self.half_side,
        }
    }

    /// Distance from `p` to the nearest point of the square (0 inside).
    pub fn min_distance(&self, p: Vec2) -> f64 {
        let (x0, x1, y0, y1) = self.bounds();
        let dx = (x0 - p.x).max(0.0).max(p.x - x1);
        let dy = (y0 - p.y).max(0.0).max(p.y - y1);
        dx.hypot(dy)
    }

    /// Distance from `p` to the farthest corner.
    pub fn max_distance(&self, p: Vec2) -> f64 {
        let (x0, x1, y0, y1) = self.bounds();
        let dx = (x0 - p.x).abs().max((x1 - p.x).abs());
        let dy = (y0 - p.y).abs().max((y1 - p.y).abs());
        dx.hypot(dy)
    }
}

/// A disk `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

/// Lattice offsets of the order-`k` reflection ring, `2a·G_k` scaled back to
/// integer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RingOffsets {
    pub order: usize,
    pub offsets: Vec<Vec2>,
}

/// Lattice steps `(i, j)` with `|i| + |j| = k`, in a fixed order.
pub fn ring_steps(k: usize) -> Vec<(i64, i64)> {
    if k == 0 {
        return vec![(0, 0)];
    }
    let k = k as i64;
    let mut steps = Vec::with_capacity(4 * k as usize);
    for i in -k..=k {
        let rest = k - i.abs();
        steps.push((i, rest));
        if rest != 0 {
            steps.push((i, -rest));
        }
    }
    steps
}

/// Offsets `2a·(i, j)` with `|i| + |j| = k`; `{(0,0)}` for `k = 0`.
pub fn ring_offsets(k: usize, a: f64) -> RingOffsets {
    let offsets = ring_steps(k)
        .into_iter()
        .map(|(i, j)| Vec2::new(2.0 * a * i as f64, 2.0 * a * j as f64))
        .collect();
    RingOffsets { order: k, offsets }
}

/// Union of squares, optionally intersected with a disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    squares: Vec<Square>,
    clip: Option<Disk>,
}

impl Region {
    pub fn new(squares: Vec<Square>, clip: Option<Disk>) -> Self {
        Region { squares, clip }
    }

    pub fn empty() -> Self {
        Region {
            squares: Vec::new(),
            clip: None,
        }
    }

    pub fn square(square: Square) -> Self {
        Region::new(vec![square], None)
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn clip(&self) -> Option<Disk> {
        self.clip
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty() || self.clip.is_some_and(|d| d.radius <= 0.0)
    }

    /// Same squares, clipped by `disk` (replacing any existing clip).
    pub fn with_clip(&self, disk: Option<Disk>) -> Region {
        Region {
            squares: self.squares.clone(),
            clip: disk,
        }
    }

    /// Clip with a disk of the given signal radius centred at the origin.
    pub fn clipped_to(&self, radius: SignalRadius) -> Region {
        match radius {
            SignalRadius::Empty => Region::empty(),
            SignalRadius::Infinite => self.with_clip(None),
            SignalRadius::Finite(r) => self.with_clip(Some(Disk {
                center: Vec2::ZERO,
                radius: r,
            })),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let in_disk = self
            .clip
            .is_none_or(|d| (p - d.center).norm_sq() <= d.radius * d.radius);
        in_disk && self.squares.iter().any(|s| s.contains(p))
    }

    pub fn translated(&self, by: Vec2) -> Region {
        Region {
            squares: self.squares.iter().map(|s| s.translated(by)).collect(),
            clip: self.clip.map(|d| Disk {
                center: d.center + by,
                radius: d.radius,
            }),
        }
    }
}

/// Ring `F_k(-y, a)`: the order-`k` squares translated so that the user at
/// `y` sits at the origin.
pub fn ring_region(k: usize, user: Vec2, a: f64) -> Result<Region, GeometryError> {
    check_user(user, a)?;
    let squares = ring_offsets(k, a)
        .offsets
        .into_iter()
        .map(|o| Square::new(o - user, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Region::new(squares, None))
}

pub(crate) fn check_user(user: Vec2, a: f64) -> Result<(), GeometryError> {
    if !(a > 0.0) {
        return Err(GeometryError::NonPositiveHalfSide(a));
    }
    // a few ulps of slack so that `a/√2`-style locations built from `a` pass
    let slack = 4.0 * f64::EPSILON * a;
    if !(user.x.abs() <= a + slack && user.y.abs() <= a + slack) {
        return Err(GeometryError::UserOutsideRoom(user.x, user.y, a));
    }
    Ok(())
}

/// Order of the ring containing `p` when the room has half-side `a`.
///
/// Points on a shared edge belong to the lowest order touching them.
pub fn ring_order_of(p: Vec2, a: f64) -> usize {
    fn candidates(v: f64, a: f64) -> [i64; 2] {
        let c = (v / (2.0 * a)).round() as i64;
        let alt = if v - 2.0 * a * c as f64 >= a {
            c + 1
        } else if 2.0 * a * c as f64 - v >= a {
            c - 1
        } else {
            c
        };
        [c, alt]
    }
    let mut best = usize::MAX;
    for i in candidates(p.x, a) {
        for j in candidates(p.y, a) {
            best = best.min((i.unsigned_abs() + j.unsigned_abs()) as usize);
        }
    }
    best
}

/// Radius within which an order-`k` transmitter beats the noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalRadius {
    /// No transmitter of this order can reach SINR `tau`.
    Empty,
    Finite(f64),
    /// Noise-free case: no radius limit.
    Infinite,
}

impl SignalRadius {
    pub fn value(self) -> f64 {
        match self {
            SignalRadius::Empty => 0.0,
            SignalRadius::Finite(r) => r,
            SignalRadius::Infinite => f64::INFINITY,
        }
    }
}

/// `a_D^(k) = [η^{k/β} (τσ²)^{-1/β} − h²]^{1/2}`.
pub fn signal_radius(
    k: usize,
    tau: f64,
    sigma2: f64,
    eta: f64,
    beta: f64,
    h: f64,
) -> Result<SignalRadius, GeometryError> {
    if !(tau >= 1.0) {
        return Err(GeometryError::ThresholdBelowOne(tau));
    }
    if !(beta > 0.0) || !(h >= 0.0) || !(sigma2 >= 0.0) || !(0.0..=1.0).contains(&eta) {
        return Err(GeometryError::InvalidArgument(format!(
            "signal_radius(beta={beta}, h={h}, sigma2={sigma2}, eta={eta})"
        )));
    }
    let attenuation = eta.powi(k as i32);
    if attenuation == 0.0 {
        return Ok(SignalRadius::Empty);
    }
    if sigma2 == 0.0 {
        return Ok(SignalRadius::Infinite);
    }
    let reach = attenuation.powf(1.0 / beta) * (tau * sigma2).powf(-1.0 / beta);
    let bracket = reach - h * h;
    if bracket > 0.0 {
        Ok(SignalRadius::Finite(bracket.sqrt()))
    } else {
        Ok(SignalRadius::Empty)
    }
}

/// Area of the region.
///
/// Square–disk intersections use a closed-form chord integral, so the result
/// is exact up to rounding; `_tol` is accepted for interface symmetry with the
/// quadrature routines.
pub fn area(region: &Region, _tol: f64) -> f64 {
    region
        .squares
        .iter()
        .map(|s| match region.clip {
            None => s.area(),
            Some(d) => square_disk_area(s, d),
        })
        .sum()
}

/// Area of `square ∩ disk`.
pub fn square_disk_area(square: &Square, disk: Disk) -> f64 {
    let (x0, x1, y0, y1) = square.bounds();
    rect_disk_area(
        x0 - disk.center.x,
        x1 - disk.center.x,
        y0 - disk.center.y,
        y1 - disk.center.y,
        disk.radius,
    )
}

/// Area of `[x0,x1]×[y0,y1] ∩ B(0, r)` by integrating the clipped chord
/// length piecewise in closed form.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if r <= 0.0 || x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let lo = x0.max(-r);
    let hi = x1.min(r);
    if hi <= lo {
        return 0.0;
    }
    // antiderivative of sqrt(r² − x²)
    let semi = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
    };
    let mut cuts = vec![lo, hi];
    for yv in [y0, y1] {
        if yv.abs() < r {
            let c = (r * r - yv * yv).sqrt();
            for x in [-c, c] {
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_arc = s < y1;
        let bottom_is_arc = -s > y0;
        let top = if top_is_arc { s } else { y1 };
        let bottom = if bottom_is_arc { -s } else { y0 };
        if top <= bottom {
            continue;
        }
        let arc = semi(q) - semi(p);
        let flat = q - p;
        total += match (top_is_arc, bottom_is_arc) {
            (true, true) => 2.0 * arc,
            (true, false) => arc - y0 * flat,
            (false, true) => y1 * flat + arc,
            (false, false) => (y1 - y0) * flat,
        };
    }
    total.max(0.0)
}

/// Angular measure (radians) of the origin-centred circle of radius `r` that
/// lies inside `[x0,x1]×[y0,y1]`.
pub fn rect_circle_angle(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return if x0 <= 0.0 && 0.0 <= x1 && y0 <= 0.0 && 0.0 <= y1 {
            2.0 * PI
        } else {
            0.0
        };
    }
    let two_pi = 2.0 * PI;
    let mut angles: Vec<f64> = Vec::with_capacity(10);
    angles.push(0.0);
    angles.push(two_pi);
    for xv in [x0, x1] {
        if xv.abs() < r {
            let c = (xv / r).acos();
            angles.push(c);
            angles.push(two_pi - c);
        }
    }
    for yv in [y0, y1] {
        if yv.abs() < r {
            let s = (yv / r).asin();
            angles.push(s.rem_euclid(two_pi));
            angles.push((PI - s).rem_euclid(two_pi));
        }
    }
    angles.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in angles.windows(2) {
        let span = w[1] - w[0];
        if span <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let (px, py) = (r * mid.cos(), r * mid.sin());
        if px >= x0 && px <= x1 && py >= y0 && py <= y1 {
            total += span;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sorted(mut v: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
        v.sort();
        v
    }

    #[test]
    fn ring_zero_is_origin() {
        assert_eq!(ring_offsets(0, 9.0).offsets, vec![Vec2::ZERO]);
    }

    #[test]
    fn ring_one_and_two_offsets() {
        let r1: Vec<(i64, i64)> = ring_offsets(1, 9.0)
            .offsets
            .iter()
            .map(|o| (o.x as i64, o.y as i64))
            .collect();
        assert_eq!(sorted(r1), vec![(-18, 0), (0, -18), (0, 18), (18, 0)]);
        let r2: Vec<(i64, i64)> = ring_offsets(2, 9.0)
            .offsets
            .iter()
            .map(|o| (o.x as i64, o.y as i64))
            .collect();
        assert_eq!(
            sorted(r2),
            vec![
                (-36, 0),
                (-18, -18),
                (-18, 18),
                (0, -36),
                (0, 36),
                (18, -18),
                (18, 18),
                (36, 0)
            ]
        );
    }

    #[test]
    fn ring_cardinality() {
        for k in 1..=10 {
            let offs = ring_offsets(k, 1.0).offsets;
            assert_eq!(offs.len(), 4 * k);
            for (n, p) in offs.iter().enumerate() {
                assert!(offs[n + 1..].iter().all(|q| q != p));
            }
        }
    }

    #[test]
    fn ring_region_membership() {
        let r0 = ring_region(0, Vec2::ZERO, 9.0).unwrap();
        assert_eq!(r0.squares().len(), 1);
        assert_eq!(r0.squares()[0].center(), Vec2::ZERO);
        assert_eq!(r0.squares()[0].half_side(), 9.0);

        let r1 = ring_region(1, Vec2::new(9.0, 9.0), 9.0).unwrap();
        assert!(r1.contains(Vec2::new(-27.0, -9.0)));

        let r2 = ring_region(2, Vec2::ZERO, 9.0).unwrap();
        assert!(r2.contains(Vec2::new(18.9, 18.9)));
    }

    #[test]
    fn ring_region_rejects_user_outside() {
        assert!(matches!(
            ring_region(0, Vec2::new(9.5, 0.0), 9.0),
            Err(GeometryError::UserOutsideRoom(..))
        ));
    }

    #[test]
    fn ring_order_lowest_wins_on_boundary() {
        assert_eq!(ring_order_of(Vec2::new(9.0, 0.0), 9.0), 0);
        assert_eq!(ring_order_of(Vec2::new(9.1, 0.0), 9.0), 1);
        assert_eq!(ring_order_of(Vec2::new(27.0, 9.0), 9.0), 1);
        assert_eq!(ring_order_of(Vec2::new(-20.0, 20.0), 9.0), 2);
    }

    #[test]
    fn signal_radius_values() {
        let sigma2 = 1.6201027e-12;
        let r0 = signal_radius(0, 1.0, sigma2, 0.07, 4.0, 3.5).unwrap();
        // (σ²)^{-1/4} ≈ 887.3, minus h² = 12.25, square root
        let expected = ((sigma2).powf(-0.25) - 12.25_f64).sqrt();
        assert_relative_eq!(r0.value(), expected, max_relative = 1e-12);
        assert_relative_eq!(r0.value(), 29.5655, max_relative = 1e-4);
        let r1 = signal_radius(1, 1.0, sigma2, 0.07, 4.0, 3.5).unwrap();
        let expected1 = (0.07_f64.powf(0.25) * sigma2.powf(-0.25) - 12.25).sqrt();
        assert_relative_eq!(r1.value(), expected1, max_relative = 1e-12);
        assert_relative_eq!(r1.value(), 21.07, max_relative = 1e-3);
        assert_eq!(signal_radius(0, 1.0, 1.0, 0.07, 4.0, 3.5).unwrap(), SignalRadius::Empty);
        assert_eq!(
            signal_radius(2, 1.0, 0.0, 0.07, 4.0, 3.5).unwrap(),
            SignalRadius::Infinite
        );
        assert!(signal_radius(0, 0.5, sigma2, 0.07, 4.0, 3.5).is_err());
    }

    #[test]
    fn signal_radius_monotone() {
        let base = |k, tau, s2, eta, h| signal_radius(k, tau, s2, eta, 4.0, h).unwrap().value();
        let b = base(1, 2.0, 1e-12, 0.3, 3.0);
        assert!(base(2, 2.0, 1e-12, 0.3, 3.0) <= b);
        assert!(base(1, 3.0, 1e-12, 0.3, 3.0) <= b);
        assert!(base(1, 2.0, 2e-12, 0.3, 3.0) <= b);
        assert!(base(1, 2.0, 1e-12, 0.3, 3.5) <= b);
        assert!(base(1, 2.0, 1e-12, 0.5, 3.0) >= b);
    }

    #[test]
    fn area_examples() {
        let sq = Square::new(Vec2::ZERO, 9.0).unwrap();
        assert_eq!(area(&Region::square(sq), 1e-9), 324.0);
        let clipped = Region::new(
            vec![sq],
            Some(Disk {
                center: Vec2::ZERO,
                radius: 886.3,
            }),
        );
        assert_relative_eq!(area(&clipped, 1e-9), 324.0, max_relative = 1e-14);
        let unit = Square::new(Vec2::new(0.5, 0.5), 0.5).unwrap();
        let quarter = Region::new(
            vec![unit],
            Some(Disk {
                center: Vec2::ZERO,
                radius: 1.0,
            }),
        );
        assert_relative_eq!(area(&quarter, 1e-9), PI / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn rect_disk_area_edge_cases() {
        // disk inside rectangle
        assert_relative_eq!(
            rect_disk_area(-5.0, 5.0, -5.0, 5.0, 2.0),
            4.0 * PI,
            max_relative = 1e-14
        );
        // half disk
        assert_relative_eq!(rect_disk_area(0.0, 5.0, -5.0, 5.0, 2.0), 2.0 * PI, max_relative = 1e-14);
        // tangent from outside
        assert_eq!(rect_disk_area(2.0, 5.0, -5.0, 5.0, 2.0), 0.0);
        // rectangle fully outside
        assert_eq!(rect_disk_area(3.0, 5.0, 3.0, 5.0, 2.0), 0.0);
        // strip through the middle: ∫_{-1}^{1} 2 min(1, sqrt(4-x²)) dx = 4
        assert_relative_eq!(rect_disk_area(-1.0, 1.0, -1.0, 1.0, 2.0), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn rect_disk_area_matches_grid_count() {
        let cases = [
            (-3.0, 4.0, -1.0, 6.0, 4.5),
            (1.0, 7.0, -2.0, 2.0, 5.0),
            (-8.0, -2.0, -8.0, -2.0, 9.0),
        ];
        for (x0, x1, y0, y1, r) in cases {
            let n = 1500;
            let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
            let mut hits = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let px = x0 + (i as f64 + 0.5) * dx;
                    let py = y0 + (j as f64 + 0.5) * dy;
                    if px * px + py * py <= r * r {
                        hits += 1;
                    }
                }
            }
            let grid = hits as f64 * dx * dy;
            assert_relative_eq!(rect_disk_area(x0, x1, y0, y1, r), grid, max_relative = 1e-4);
        }
    }

    #[test]
    fn circle_angle_cases() {
        // origin inside, circle inside
        assert_relative_eq!(rect_circle_angle(-9.0, 9.0, -9.0, 9.0, 3.0), 2.0 * PI);
        // origin at corner: quarter
        assert_relative_eq!(
            rect_circle_angle(-18.0, 0.0, -18.0, 0.0, 5.0),
            PI / 2.0,
            max_relative = 1e-14
        );
        // circle beyond the far corner
        assert_eq!(rect_circle_angle(-18.0, 0.0, -18.0, 0.0, 26.0), 0.0);
        // one edge crossing: 2π − 2 acos(d/r)
        let a = rect_circle_angle(-100.0, 5.0, -100.0, 100.0, 10.0);
        assert_relative_eq!(a, 2.0 * PI - 2.0 * (0.5_f64).acos(), max_relative = 1e-14);
    }

    #[test]
    fn tiling_exhaustive_grid() {
        // interior sample points of the lattice squares with L1 index <= K are
        // covered exactly once by rings 0..=K and by nothing else
        let a = 1.0;
        for kmax in 0..=4usize {
            let rings: Vec<Region> = (0..=kmax).map(|k| ring_region(k, Vec2::ZERO, a).unwrap()).collect();
            let span = (2 * kmax + 2) as f64 * a;
            let n = 100;
            for i in 0..n {
                for j in 0..n {
                    let p = Vec2::new(
                        -span + (i as f64 + 0.37) * 2.0 * span / n as f64,
                        -span + (j as f64 + 0.61) * 2.0 * span / n as f64,
                    );
                    let hits = rings
                        .iter()
                        .map(|r| r.squares().iter().filter(|s| s.contains(p)).count())
                        .sum::<usize>();
                    let lattice = ((p.x / (2.0 * a)).round().abs() + (p.y / (2.0 * a)).round().abs()) as usize;
                    assert_eq!(hits, usize::from(lattice <= kmax), "K={kmax} p={p:?}");
                }
            }
        }
    }
}
