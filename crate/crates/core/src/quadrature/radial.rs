//! Integrals of radial kernels over planar regions, done in path-loss space.
//!
//! For a region `R` around the origin and `u = ℓ(r) = (r² + h²)^{-β}`,
//!
//! ```text
//! ∫_R e^{z ℓ(|x|)} dx = ∫ e^{z u} w(u) du,   w(u) = θ(r(u)) u^{-1-1/β} / (2β)
//! ```
//!
//! where `θ(r)` is the angle of the radius-`r` circle lying inside `R`. The
//! density `w` is smooth between a handful of kink radii (edge and corner
//! distances), so it is fitted once by Legendre series on graded panels and
//! every transform is then a sum of closed-form Legendre–exponential moments.
//! This keeps the cost per transform flat as `|z|` grows, which matters for
//! the oscillatory characteristic-function integrals.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::gauss::gauss_legendre;
use super::special::upper_gamma;
use super::QuadError;
use crate::geometry::{rect_circle_angle, Region};

const ORDER: usize = 16;
const GRADING_LEVELS: i32 = 10;
const GEOMETRIC_RATIO: f64 = 1.5;
/// Below this `|q|` the 16-node sum is already exact to rounding.
const DIRECT_LIMIT: f64 = 3.0;
/// Below this `|q|` moments come from a 32-node rule; above, from recurrence.
const MOMENT_RULE_LIMIT: f64 = 12.0;

/// Axis-aligned rectangle `[x0,x1]×[y0,y1]` in user-centred coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    fn min_distance(&self) -> f64 {
        let dx = self.x0.max(0.0).max(-self.x1);
        let dy = self.y0.max(0.0).max(-self.y1);
        dx.hypot(dy)
    }

    fn max_distance(&self) -> f64 {
        self.x0.abs().max(self.x1.abs()).hypot(self.y0.abs().max(self.y1.abs()))
    }

    fn kink_radii(&self, out: &mut Vec<f64>) {
        for v in [self.x0, self.x1, self.y0, self.y1] {
            out.push(v.abs());
        }
        for x in [self.x0, self.x1] {
            for y in [self.y0, self.y1] {
                out.push(x.hypot(y));
            }
        }
    }
}

struct Tables {
    /// `P_k` at the 16 Gauss nodes, `[k][i]`.
    p16: Vec<[f64; ORDER]>,
    /// `w_j P_k(x_j)` on the 32-node rule, `[k][j]`.
    wp32: Vec<Vec<f64>>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let g16 = gauss_legendre(ORDER);
        let g32 = gauss_legendre(2 * ORDER);
        let mut p16 = vec![[0.0; ORDER]; ORDER];
        for (i, &x) in g16.nodes.iter().enumerate() {
            for (k, pk) in legendre_all(x).into_iter().enumerate() {
                p16[k][i] = pk;
            }
        }
        let mut wp32 = vec![vec![0.0; 2 * ORDER]; ORDER];
        for (j, (&x, &w)) in g32.nodes.iter().zip(&g32.weights).enumerate() {
            for (k, pk) in legendre_all(x).into_iter().enumerate() {
                wp32[k][j] = w * pk;
            }
        }
        Tables { p16, wp32 }
    })
}

fn legendre_all(x: f64) -> [f64; ORDER] {
    let mut p = [0.0; ORDER];
    p[0] = 1.0;
    p[1] = x;
    for k in 1..ORDER - 1 {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

#[derive(Debug, Clone)]
struct Panel {
    mid: f64,
    half: f64,
    /// Gauss weight × density at each node.
    weighted: [f64; ORDER],
    /// Legendre coefficients of the density on this panel.
    coeffs: [f64; ORDER],
}

/// `r ≤ r_cap` part when `h = 0`: constant angle `theta0`, `u ∈ [u_cap, ∞)`.
#[derive(Debug, Clone, Copy)]
struct Cap {
    theta0: f64,
    u_cap: f64,
}

/// Fitted path-loss-space density of a region.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    beta: f64,
    panels: Vec<Panel>,
    cap: Option<Cap>,
}

impl RadialDensity {
    /// Density of `∪ rects ∩ B(0, clip)`.
    pub fn new(rects: &[Rect], h: f64, beta: f64, clip: Option<f64>) -> Result<Self, QuadError> {
        if !(beta > 0.0) || !(h >= 0.0) {
            return Err(QuadError::InvalidRegion(format!("beta={beta}, h={h}")));
        }
        let empty = RadialDensity {
            beta,
            panels: Vec::new(),
            cap: None,
        };
        if rects.is_empty() || clip.is_some_and(|r| !(r > 0.0)) {
            return Ok(empty);
        }
        let r_far = rects.iter().map(Rect::max_distance).fold(0.0, f64::max);
        let r_hi = clip.map_or(r_far, |c| c.min(r_far));
        let r_lo = rects.iter().map(Rect::min_distance).fold(f64::INFINITY, f64::min);
        if !(r_lo < r_hi) {
            return Ok(empty);
        }
        let ell = |r: f64| {
            let base = r * r + h * h;
            if base == 0.0 {
                f64::INFINITY
            } else {
                base.powf(-beta)
            }
        };
        let theta = |r: f64| -> f64 { rects.iter().map(|q| rect_circle_angle(q.x0, q.x1, q.y0, q.y1, r)).sum() };

        let mut kinks = Vec::new();
        for q in rects {
            q.kink_radii(&mut kinks);
        }
        kinks.retain(|&r| r > r_lo && r < r_hi);
        kinks.sort_by(f64::total_cmp);
        kinks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));

        let mut cap = None;
        let mut r_inner = r_lo;
        if h == 0.0 && r_lo == 0.0 {
            let r_cap = kinks.first().copied().unwrap_or(r_hi);
            cap = Some(Cap {
                theta0: theta(0.5 * r_cap),
                u_cap: ell(r_cap),
            });
            r_inner = r_cap;
        }

        // cut points in u, ascending
        let mut cuts: Vec<f64> = std::iter::once(r_hi)
            .chain(kinks.iter().copied().filter(|&r| r > r_inner))
            .chain(std::iter::once(r_inner))
            .map(ell)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut edges: Vec<f64> = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) || !hi.is_finite() {
                continue;
            }
            let d = hi - lo;
            edges.push(lo);
            edges.push(hi);
            for m in 0..GRADING_LEVELS {
                let step = d * 0.5 * 4f64.powi(-m);
                edges.push(lo + step);
                edges.push(hi - step);
            }
            let mut u = lo;
            while u * GEOMETRIC_RATIO < hi {
                u *= GEOMETRIC_RATIO;
                edges.push(u);
            }
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let g16 = gauss_legendre(ORDER);
        let t = tables();
        let density = |u: f64| {
            let r = (u.powf(-1.0 / beta) - h * h).max(0.0).sqrt();
            theta(r) * u.powf(-1.0 - 1.0 / beta) / (2.0 * beta)
        };
        let mut panels = Vec::with_capacity(edges.len());
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let mut weighted = [0.0; ORDER];
            for ((w, &gw), &x) in weighted.iter_mut().zip(&g16.weights).zip(&g16.nodes) {
                *w = gw * density(mid + half * x);
            }
            let mut coeffs = [0.0; ORDER];
            for (k, c) in coeffs.iter_mut().enumerate() {
                let s: f64 = (0..ORDER).map(|i| t.p16[k][i] * weighted[i]).sum();
                *c = (2.0 * k as f64 + 1.0) / 2.0 * s;
            }
            panels.push(Panel {
                mid,
                half,
                weighted,
                coeffs,
            });
        }
        Ok(RadialDensity { beta, panels, cap })
    }

    /// Density of a [`Region`] whose clip disk, if any, is centred at the origin.
    pub fn from_region(region: &Region, h: f64, beta: f64) -> Result<Self, QuadError> {
        if region.squares().is_empty() {
            return RadialDensity::new(&[], h, beta, None);
        }
        let clip = match region.clip() {
            None => None,
            Some(d) if d.center.norm() == 0.0 => Some(d.radius),
            Some(_) => {
                return Err(QuadError::InvalidRegion(
                    "radial densities need an origin-centred clip disk".into(),
                ))
            }
        };
        let rects: Vec<Rect> = region
            .squares()
            .iter()
            .map(|s| {
                let (x0, x1, y0, y1) = s.bounds();
                Rect { x0, x1, y0, y1 }
            })
            .collect();
        RadialDensity::new(&rects, h, beta, clip)
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty() && self.cap.is_none()
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Region area, `∫ w(u) du`.
    pub fn mass(&self) -> f64 {
        let body: f64 = self
            .panels
            .iter()
            .map(|p| p.half * p.weighted.iter().sum::<f64>())
            .sum();
        body + self.cap.map_or(0.0, |c| self.cap_mass(c))
    }

    /// `∫_R ℓ(|x|) dx`; infinite when `h = 0` and the origin touches `R`.
    pub fn first_moment(&self) -> f64 {
        if self.cap.is_some() {
            return f64::INFINITY;
        }
        self.panels
            .iter()
            .map(|p| p.half * (2.0 * p.mid * p.coeffs[0] + p.half * (2.0 / 3.0) * p.coeffs[1]))
            .sum()
    }

    /// `∫_R e^{z ℓ(|x|)} dx` for `Re z ≤ 0`.
    pub fn transform(&self, z: Complex64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        if z == Complex64::new(0.0, 0.0) {
            return Complex64::new(self.mass(), 0.0);
        }
        let g16 = gauss_legendre(ORDER);
        let t = tables();
        for p in &self.panels {
            let q = z * p.half;
            let qn = q.norm();
            if qn < DIRECT_LIMIT {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..ORDER {
                    s += (q * g16.nodes[i]).exp() * p.weighted[i];
                }
                total += (z * p.mid).exp() * s * p.half;
                continue;
            }
            let shift = q.re.abs();
            let moments = if qn < MOMENT_RULE_LIMIT {
                moments_by_rule(q, shift, t)
            } else {
                moments_by_recurrence(q, shift)
            };
            let s: Complex64 = p.coeffs.iter().zip(&moments).map(|(c, m)| m * c).sum();
            total += (z * p.mid + shift).exp() * s * p.half;
        }
        if let Some(c) = self.cap {
            total += self.cap_transform(c, z);
        }
        total
    }

    fn cap_mass(&self, c: Cap) -> f64 {
        c.theta0 / 2.0 * c.u_cap.powf(-1.0 / self.beta)
    }

    fn cap_transform(&self, c: Cap, z: Complex64) -> Complex64 {
        let w = -z;
        let inv_beta = 1.0 / self.beta;
        w.powf(inv_beta) * upper_gamma(-inv_beta, w * c.u_cap) * (c.theta0 / (2.0 * self.beta))
    }
}

/// `e^{-shift} ∫_{-1}^{1} P_k(x) e^{q x} dx` from the 32-node rule.
fn moments_by_rule(q: Complex64, shift: f64, t: &Tables) -> [Complex64; ORDER] {
    let g32 = gauss_legendre(2 * ORDER);
    let e: Vec<Complex64> = g32.nodes.iter().map(|&x| (q * x - shift).exp()).collect();
    let mut m = [Complex64::new(0.0, 0.0); ORDER];
    for (k, mk) in m.iter_mut().enumerate() {
        *mk = t.wp32[k].iter().zip(&e).map(|(w, v)| v * w).sum();
    }
    m
}

/// Same moments by the upward recurrence `M_{k+1} = M_{k-1} − (2k+1) M_k / q`,
/// stable once `|q|` exceeds the order.
fn moments_by_recurrence(q: Complex64, shift: f64) -> [Complex64; ORDER] {
    let ep = (q - shift).exp();
    let em = (-q - shift).exp();
    let mut m = [Complex64::new(0.0, 0.0); ORDER];
    m[0] = (ep - em) / q;
    m[1] = (ep + em) / q - m[0] / q;
    for k in 1..ORDER - 1 {
        m[k + 1] = m[k - 1] - m[k] * (2.0 * k as f64 + 1.0) / q;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rect_disk_area, Vec2};
    use crate::quadrature::{integrate_region, QuadratureSpec};
    use std::f64::consts::PI;

    fn room(y: Vec2, a: f64) -> Rect {
        Rect {
            x0: -a - y.x,
            x1: a - y.x,
            y0: -a - y.y,
            y1: a - y.y,
        }
    }

    #[test]
    fn mass_is_area() {
        for y in [
            Vec2::new(9.0, 9.0),
            Vec2::ZERO,
            Vec2::new(9.0, 0.0),
            Vec2::new(3.0, -7.0),
        ] {
            let r = room(y, 9.0);
            let d = RadialDensity::new(&[r], 3.5, 4.0, None).unwrap();
            assert!((d.mass() - 324.0).abs() < 1e-9, "y={y:?} mass={}", d.mass());
            let c = RadialDensity::new(&[r], 3.5, 4.0, Some(10.0)).unwrap();
            let want = rect_disk_area(r.x0, r.x1, r.y0, r.y1, 10.0);
            assert!((c.mass() - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn moments_agree_across_methods() {
        let t = tables();
        for q in [
            Complex64::new(0.0, 12.5),
            Complex64::new(-13.0, 0.0),
            Complex64::new(-4.0, 20.0),
            Complex64::new(0.0, -13.5),
        ] {
            let shift = q.re.abs();
            let a = moments_by_rule(q, shift, t);
            let b = moments_by_recurrence(q, shift);
            for k in 0..ORDER {
                assert!((a[k] - b[k]).norm() < 1e-10, "q={q} k={k} {} {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn transform_matches_planar_cubature() {
        let spec = QuadratureSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-11,
            max_panels: 200_000,
            panel_order: 16,
        };
        let (h, beta) = (3.5, 4.0);
        let y = Vec2::new(9.0, 9.0);
        let region = crate::geometry::ring_region(0, y, 9.0).unwrap();
        let d = RadialDensity::from_region(&region, h, beta).unwrap();
        for s in [1e3, 1e5, 1e6] {
            let z = Complex64::new(0.0, -s);
            let want =
                integrate_region(|p: Vec2| (z * (p.norm_sq() + h * h).powf(-beta)).exp(), &region, &spec).unwrap();
            let got = d.transform(z);
            assert!(
                (got - want).norm() < 1e-9 * want.norm().max(1.0),
                "s={s} got={got} want={want}"
            );
        }
    }

    #[test]
    fn first_moment_matches_cubature() {
        let spec = QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_panels: 200_000,
            panel_order: 16,
        };
        let region = crate::geometry::ring_region(1, Vec2::new(4.0, -2.0), 9.0).unwrap();
        let d = RadialDensity::from_region(&region, 3.5, 4.0).unwrap();
        let want = integrate_region(
            |p: Vec2| Complex64::new((p.norm_sq() + 12.25).powi(-4), 0.0),
            &region,
            &spec,
        )
        .unwrap();
        assert!((d.first_moment() - want.re).abs() < 1e-10 * want.re);
    }

    #[test]
    fn flat_cap() {
        // h = 0 with the unit disk inside the square: the whole region is the cap
        let r = Rect {
            x0: -5.0,
            x1: 5.0,
            y0: -5.0,
            y1: 5.0,
        };
        let d = RadialDensity::new(&[r], 0.0, 4.0, Some(1.0)).unwrap();
        assert!((d.mass() - PI).abs() < 1e-12);
        // ∫_0^1 2πr e^{-s r^{-8}} dr at s = 0.3 (reference by substitution)
        let s = 0.3;
        let g = gauss_legendre(64);
        let mut want = 0.0;
        // split r in [0, 1] geometrically to resolve the essential zero at 0
        let mut hi: f64 = 1.0;
        while hi > 1e-3 {
            let lo = hi * 0.5;
            for (&x, &w) in g.nodes.iter().zip(&g.weights) {
                let rr = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                want += 0.5 * (hi - lo) * w * 2.0 * PI * rr * (-s * rr.powi(-8)).exp();
            }
            hi = lo;
        }
        let got = d.transform(Complex64::new(-s, 0.0));
        assert!((got.re - want).abs() < 1e-12, "got={got} want={want}");
        assert!(got.im.abs() < 1e-12);
    }
}
