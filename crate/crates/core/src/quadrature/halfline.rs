use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::gauss::gk21;
use super::{QuadError, QuadratureSpec};

/// Integral value with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    /// Number of GK21 interval evaluations spent.
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    panel: usize,
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
    live: bool,
}

#[derive(PartialEq)]
struct Key(f64, usize);

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

/// Globally adaptive interval pool shared by the finite and half-line drivers.
struct Pool<F> {
    f: F,
    intervals: Vec<Interval>,
    heap: BinaryHeap<Key>,
    budget: usize,
}

impl<F> Pool<F>
where
    F: FnMut(usize, f64) -> Complex64,
{
    fn new(f: F, budget: usize) -> Self {
        Pool {
            f,
            intervals: Vec::new(),
            heap: BinaryHeap::new(),
            budget,
        }
    }

    fn push(&mut self, panel: usize, a: f64, b: f64) {
        let f = &mut self.f;
        let mut g = |x: f64| f(panel, x);
        let (value, err) = gk21(&mut g, a, b);
        let idx = self.intervals.len();
        self.intervals.push(Interval {
            panel,
            a,
            b,
            value,
            err,
            live: true,
        });
        self.heap.push(Key(err, idx));
    }

    fn exhausted(&self) -> bool {
        self.intervals.len() >= self.budget
    }

    fn totals(&self) -> (Complex64, f64) {
        // summed in creation order so results do not depend on heap ties
        self.intervals
            .iter()
            .filter(|iv| iv.live)
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), iv| (v + iv.value, e + iv.err))
    }

    fn panel_total(&self, panel: usize) -> (Complex64, f64) {
        self.intervals
            .iter()
            .filter(|iv| iv.live && iv.panel == panel)
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), iv| (v + iv.value, e + iv.err))
    }

    /// Bisect the interval with the largest error. Returns false when the
    /// worst interval can no longer be split.
    fn refine(&mut self) -> bool {
        while let Some(Key(_, idx)) = self.heap.pop() {
            let iv = self.intervals[idx];
            if !iv.live {
                continue;
            }
            let mid = 0.5 * (iv.a + iv.b);
            if !(mid > iv.a && mid < iv.b) {
                // too narrow to split; keep it but stop refining it
                continue;
            }
            self.intervals[idx].live = false;
            self.push(iv.panel, iv.a, mid);
            self.push(iv.panel, mid, iv.b);
            return true;
        }
        false
    }
}

/// Globally adaptive GK21 on `[a, b]`.
pub fn adaptive_gk21<F>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> Complex64,
{
    let mut pool = Pool::new(|_, x| f(x), max_intervals.max(1));
    pool.push(0, a, b);
    loop {
        let (value, error) = pool.totals();
        if error <= abs_tol.max(rel_tol * value.norm()) {
            return Ok(Estimate {
                value,
                error,
                intervals: pool.intervals.len(),
            });
        }
        if pool.exhausted() || !pool.refine() {
            return Err(QuadError::ToleranceNotReached { estimate: value, error });
        }
    }
}

/// `∫_0^∞ g(t) dt` (or `∫_{t0}^∞` when `start > 0`).
///
/// With `start == 0` the first panel is `[0, scale]`, integrated after the
/// substitution `t = scale·v⁴` so integrable endpoint singularities up to
/// `t^{-3/4}` become smooth; later panels are `[scale·2ⁿ⁻¹, scale·2ⁿ]`.
/// With `start > 0` the panels are `[start·2ⁿ, start·2ⁿ⁺¹]`. Panels are added
/// until the last two each contribute less than `abs_tol/10`, and all
/// intervals are refined globally.
pub fn halfline_integral<G>(mut g: G, start: f64, scale: f64, spec: &QuadratureSpec) -> Result<Estimate, QuadError>
where
    G: FnMut(f64) -> Complex64,
{
    spec.validate()?;
    let from_origin = start == 0.0;
    let base = if from_origin { scale } else { start };
    if !(base > 0.0 && base.is_finite()) {
        return Err(QuadError::InvalidRegion(format!(
            "half-line start {start} / scale {scale}"
        )));
    }
    // panel 0 in v-space when starting from the origin
    let eval = |panel: usize, x: f64| {
        if from_origin && panel == 0 {
            let v2 = x * x;
            g(base * v2 * v2) * (4.0 * base * v2 * x)
        } else {
            g(x)
        }
    };
    let panel_bounds = |n: usize| -> (f64, f64) {
        if from_origin {
            if n == 0 {
                (0.0, 1.0)
            } else {
                (base * 2f64.powi(n as i32 - 1), base * 2f64.powi(n as i32))
            }
        } else {
            (base * 2f64.powi(n as i32), base * 2f64.powi(n as i32 + 1))
        }
    };
    let mut pool = Pool::new(eval, spec.max_panels);
    let mut panels = 0usize;
    let min_panels = if from_origin { 3 } else { 2 };
    let tail_cut = spec.abs_tol / 10.0;
    loop {
        // extend until the tail is certified small
        loop {
            let settled = panels >= min_panels
                && (panels - 2..panels).all(|p| {
                    let (v, e) = pool.panel_total(p);
                    v.norm() + e < tail_cut
                });
            if settled {
                break;
            }
            if pool.exhausted() || panels > 2000 {
                let (value, error) = pool.totals();
                return Err(QuadError::SlowDecay {
                    estimate: value,
                    error: error + tail_bound(&pool, panels),
                });
            }
            // an unresolved last panel says nothing about decay yet: refine
            // before extending
            if panels >= min_panels {
                let (_, e) = pool.panel_total(panels - 1);
                if e >= 0.5 * tail_cut {
                    if !pool.refine() {
                        let (value, error) = pool.totals();
                        return Err(QuadError::SlowDecay { estimate: value, error });
                    }
                    continue;
                }
            }
            let (a, b) = panel_bounds(panels);
            if !b.is_finite() {
                let (value, error) = pool.totals();
                return Err(QuadError::SlowDecay { estimate: value, error });
            }
            pool.push(panels, a, b);
            panels += 1;
        }
        let (value, error) = pool.totals();
        let tail = tail_bound(&pool, panels);
        let tol = spec.abs_tol.max(spec.rel_tol * value.norm());
        if error + tail <= tol {
            // refinement may have moved the last panels; re-check the tail
            let still_settled = (panels - 2..panels).all(|p| {
                let (v, e) = pool.panel_total(p);
                v.norm() + e < tail_cut
            });
            if still_settled {
                return Ok(Estimate {
                    value,
                    error: error + tail,
                    intervals: pool.intervals.len(),
                });
            }
            continue;
        }
        if pool.exhausted() || !pool.refine() {
            return Err(QuadError::ToleranceNotReached {
                estimate: value,
                error: error + tail,
            });
        }
    }
}

fn tail_bound<F>(pool: &Pool<F>, panels: usize) -> f64
where
    F: FnMut(usize, f64) -> Complex64,
{
    if panels == 0 {
        return 0.0;
    }
    let (v, _) = pool.panel_total(panels - 1);
    v.norm()
}

/// `∫_{t0}^∞ g(t) dt` with geometric panels; `t0 = 0` uses unit scale.
pub fn oscillatory_tail_integral<G>(g: G, t0: f64, spec: &QuadratureSpec) -> Result<Estimate, QuadError>
where
    G: FnMut(f64) -> Complex64,
{
    if t0 == 0.0 {
        halfline_integral(g, 0.0, 1.0, spec)
    } else {
        halfline_integral(g, t0, t0, spec)
    }
}

/// `P(X < s)` from the characteristic function by Gil-Pelaez inversion,
/// choosing the panel scale from the decorrelation time of `φ(t)e^{-jts}`.
pub fn gil_pelaez_cdf<C>(mut cf: C, s: f64, spec: &QuadratureSpec) -> Result<f64, QuadError>
where
    C: FnMut(f64) -> Complex64,
{
    let scale = {
        let mut moved = |t: f64| (cf(t) * Complex64::new(0.0, -t * s).exp() - 1.0).norm();
        let mut t = 1.0;
        if moved(t) > 0.5 {
            for _ in 0..400 {
                t *= 0.5;
                if moved(t) <= 0.5 {
                    break;
                }
            }
        } else {
            for _ in 0..400 {
                if moved(t) > 0.5 {
                    break;
                }
                t *= 2.0;
            }
        }
        t
    };
    gil_pelaez_cdf_scaled(cf, s, scale, spec)
}

/// [`gil_pelaez_cdf`] with an explicit first-panel length.
pub fn gil_pelaez_cdf_scaled<C>(mut cf: C, s: f64, scale: f64, spec: &QuadratureSpec) -> Result<f64, QuadError>
where
    C: FnMut(f64) -> Complex64,
{
    // the probability tolerance maps to π·abs_tol on the integral; a
    // relative target means nothing for a difference of probabilities
    let inner = QuadratureSpec {
        abs_tol: spec.abs_tol * PI,
        rel_tol: f64::EPSILON,
        ..*spec
    };
    let integrand = |t: f64| {
        let z = cf(t) * Complex64::new(0.0, -t * s).exp();
        Complex64::new(z.im / t, 0.0)
    };
    let to_prob = |v: Complex64| 0.5 - v.re / PI;
    match halfline_integral(integrand, 0.0, scale, &inner) {
        Ok(est) => Ok(to_prob(est.value).clamp(0.0, 1.0)),
        Err(QuadError::ToleranceNotReached { estimate, error }) => Err(QuadError::ToleranceNotReached {
            estimate: Complex64::new(to_prob(estimate), 0.0),
            error: error / PI,
        }),
        Err(QuadError::SlowDecay { estimate, error }) => Err(QuadError::SlowDecay {
            estimate: Complex64::new(to_prob(estimate), 0.0),
            error: error / PI,
        }),
        Err(e) => Err(e),
    }
}
