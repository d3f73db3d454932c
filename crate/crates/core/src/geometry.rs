//! Boundary curves and their quadrature.
//!
//! The rod boundary is split into four analytic parts: the left cap (a half
//! circle of radius `delta` centred at `(-L/2, 0)`), the lower flat at
//! `x2 = -delta`, the right cap centred at `(L/2, 0)` and the upper flat at
//! `x2 = +delta`. Each part is covered by 16-point Gauss–Legendre panels that
//! are dyadically refined towards the four junctions, where the curvature
//! jumps. Disks and ellipses use the periodic trapezoid rule instead.
//!
//! Nodes always run counterclockwise and normals point out of the inclusion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature::{barycentric_weights, gl16, lagrange_basis};
use crate::{Error, Point, Result};

/// Gauss–Legendre order of every boundary panel.
pub const PANEL_ORDER: usize = 16;

/// Dyadic refinement levels towards each junction of the rod.
pub const JUNCTION_LEVELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    LeftCap,
    LowerFlat,
    RightCap,
    UpperFlat,
    /// The whole curve of a disk or an ellipse.
    Smooth,
}

#[derive(Clone, Copy, Debug)]
pub enum Segment {
    Line {
        start: Point,
        end: Point,
    },
    /// Counterclockwise arc from `start_angle` to `end_angle > start_angle`.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { start, end } => (end - start).norm(),
            Segment::Arc { radius, start_angle, end_angle, .. } => radius * (end_angle - start_angle),
        }
    }

    /// Point at fraction `s` of the segment.
    pub fn point(&self, s: f64) -> Point {
        match *self {
            Segment::Line { start, end } => start + (end - start) * s,
            Segment::Arc { center, radius, start_angle, end_angle } => {
                let a = start_angle + (end_angle - start_angle) * s;
                center + Point::new(a.cos(), a.sin()) * radius
            }
        }
    }

    /// Outward unit normal, assuming the segment is traversed counterclockwise
    /// around the enclosed region.
    pub fn normal(&self, s: f64) -> Point {
        match *self {
            Segment::Line { start, end } => {
                let t = (end - start).normalize();
                Point::new(t.y, -t.x)
            }
            Segment::Arc { start_angle, end_angle, .. } => {
                let a = start_angle + (end_angle - start_angle) * s;
                Point::new(a.cos(), a.sin())
            }
        }
    }

    /// `point(mid + diff/2) - point(mid - diff/2)`, accurate even when `diff`
    /// is far below the rounding of `mid`.
    pub fn chord(&self, mid: f64, diff: f64) -> Point {
        match *self {
            Segment::Line { start, end } => (end - start) * diff,
            Segment::Arc { radius, start_angle, end_angle, .. } => {
                let span = end_angle - start_angle;
                let a = start_angle + span * mid;
                let s = 2.0 * radius * (0.5 * span * diff).sin();
                Point::new(-s * a.sin(), s * a.cos())
            }
        }
    }

    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Line { .. } => 0.0,
            Segment::Arc { radius, .. } => 1.0 / radius,
        }
    }
}

/// A Gauss–Legendre panel covering the fraction `[s0, s1]` of a segment.
#[derive(Clone, Debug)]
pub struct Panel {
    pub segment: Segment,
    pub s0: f64,
    pub s1: f64,
    pub part: Part,
    /// Index of the first of the panel's nodes.
    pub first: usize,
}

impl Panel {
    pub fn length(&self) -> f64 {
        self.segment.length() * (self.s1 - self.s0)
    }

    /// Segment fraction of local parameter `u`.
    pub fn fraction(&self, u: f64) -> f64 {
        self.s0 + (self.s1 - self.s0) * 0.5 * (u + 1.0)
    }

    /// `site(a).point - site(b).point`.
    pub fn chord(&self, a: f64, b: f64) -> Point {
        self.segment.chord(self.fraction(0.5 * (a + b)), (self.s1 - self.s0) * 0.5 * (a - b))
    }

    /// Arc length per unit of the local parameter `u` in `[-1, 1]`.
    pub fn speed(&self) -> f64 {
        0.5 * self.length()
    }

    pub fn site(&self, u: f64) -> Site {
        let s = self.fraction(u);
        Site { point: self.segment.point(s), normal: self.segment.normal(s), curvature: self.segment.curvature() }
    }

    /// Local parameter and distance of the panel point closest to `x`.
    pub fn closest(&self, x: &Point) -> (f64, f64) {
        let s = match self.segment {
            Segment::Line { start, end } => {
                let d = end - start;
                ((x - start).dot(&d) / d.norm_squared()).clamp(self.s0, self.s1)
            }
            Segment::Arc { center, start_angle, end_angle, .. } => {
                let v = x - center;
                let mut a = v.y.atan2(v.x);
                let span = end_angle - start_angle;
                let mid = start_angle + span * 0.5 * (self.s0 + self.s1);
                while a < mid - PI {
                    a += 2.0 * PI;
                }
                while a > mid + PI {
                    a -= 2.0 * PI;
                }
                ((a - start_angle) / span).clamp(self.s0, self.s1)
            }
        };
        let u = (2.0 * (s - self.s0) / (self.s1 - self.s0) - 1.0).clamp(-1.0, 1.0);
        (u, (self.segment.point(s) - x).norm())
    }
}

/// Geometric data at a boundary point.
#[derive(Clone, Copy, Debug)]
pub struct Site {
    pub point: Point,
    pub normal: Point,
    pub curvature: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Shape {
    /// Rounded rod with spine length `length` and half-thickness `half_width`.
    Stadium { length: f64, half_width: f64 },
    /// Ellipse `(a cos t, b sin t)`; a disk when `a == b`.
    Ellipse { a: f64, b: f64 },
}

#[derive(Clone, Debug)]
pub enum Layout {
    Panels(Vec<Panel>),
    /// Equispaced parameter nodes `t_j = 2 pi j / n` on an ellipse.
    Periodic,
}

/// A discretized closed boundary.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub shape: Shape,
    pub layout: Layout,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub curvature: Vec<f64>,
    /// Arc-length quadrature weights.
    pub weights: Vec<f64>,
    pub parts: Vec<Part>,
    /// Local panel parameter in `[-1, 1]`, or the global angle for periodic layouts.
    pub params: Vec<f64>,
    /// Owning panel of each node (zero for periodic layouts).
    pub panel_of: Vec<usize>,
}

/// Discretize the rounded rod with at least `resolution` nodes.
pub fn build_nanorod(length: f64, delta: f64, resolution: usize) -> Result<Boundary> {
    if !(length > 0.0 && delta > 0.0) {
        return Err(Error::Geometry(format!("length {length} and delta {delta} must be positive")));
    }
    if delta >= 0.5 * length {
        return Err(Error::Geometry(format!("delta {delta} must be below L/2 = {}", 0.5 * length)));
    }
    if resolution < 4 * PANEL_ORDER {
        return Err(Error::Geometry(format!("resolution {resolution} leaves fewer than {PANEL_ORDER} nodes per part")));
    }
    let h = 0.5 * length;
    let parts = [
        (
            Segment::Arc { center: Point::new(-h, 0.0), radius: delta, start_angle: 0.5 * PI, end_angle: 1.5 * PI },
            Part::LeftCap,
        ),
        (Segment::Line { start: Point::new(-h, -delta), end: Point::new(h, -delta) }, Part::LowerFlat),
        (
            Segment::Arc { center: Point::new(h, 0.0), radius: delta, start_angle: -0.5 * PI, end_angle: 0.5 * PI },
            Part::RightCap,
        ),
        (Segment::Line { start: Point::new(h, delta), end: Point::new(-h, delta) }, Part::UpperFlat),
    ];

    let perimeter = 2.0 * length + 2.0 * PI * delta;
    let panels_wanted = resolution.div_ceil(PANEL_ORDER);
    let base = panels_wanted.saturating_sub(8 * JUNCTION_LEVELS).max(8) as f64;
    let n_cap = ((base * PI * delta / perimeter).round() as usize).max(2);
    let mut n_flat = (((base - 2.0 * n_cap as f64) / 2.0).ceil() as usize).max(2);
    while PANEL_ORDER * (2 * (n_cap + n_flat) + 8 * JUNCTION_LEVELS) < resolution {
        n_flat += 1;
    }

    let counts = [n_cap, n_flat, n_cap, n_flat];
    let segments: Vec<(Segment, Part, usize)> = parts.iter().zip(counts).map(|(&(s, p), n)| (s, p, n)).collect();
    Ok(Boundary::from_segments(Shape::Stadium { length, half_width: delta }, &segments, JUNCTION_LEVELS))
}

/// Periodic trapezoid discretization of a circle of radius `radius` centred at the origin.
pub fn build_disk(radius: f64, n: usize) -> Result<Boundary> {
    build_ellipse(radius, radius, n)
}

/// Periodic trapezoid discretization of the ellipse `(a cos t, b sin t)`.
pub fn build_ellipse(a: f64, b: f64, n: usize) -> Result<Boundary> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Geometry(format!("semi-axes {a}, {b} must be positive")));
    }
    if n < 16 || n % 2 == 1 {
        return Err(Error::Geometry(format!("node count {n} must be even and at least 16")));
    }
    let shape = Shape::Ellipse { a, b };
    let mut bd = Boundary {
        shape,
        layout: Layout::Periodic,
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        parts: vec![Part::Smooth; n],
        params: Vec::with_capacity(n),
        panel_of: vec![0; n],
    };
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        let (site, speed) = ellipse_site(a, b, t);
        bd.points.push(site.point);
        bd.normals.push(site.normal);
        bd.curvature.push(site.curvature);
        bd.weights.push(speed * 2.0 * PI / n as f64);
        bd.params.push(t);
    }
    Ok(bd)
}

/// Panel discretization of a centred circle, `panels` uniform panels and no
/// refinement. Used to check the panel quadrature against disk closed forms.
pub fn build_disk_panels(radius: f64, panels: usize) -> Result<Boundary> {
    if radius <= 0.0 || panels < 2 {
        return Err(Error::Geometry(format!("radius {radius} / panels {panels} invalid")));
    }
    let seg = Segment::Arc { center: Point::zeros(), radius, start_angle: 0.0, end_angle: 2.0 * PI };
    Ok(Boundary::from_segments(Shape::Ellipse { a: radius, b: radius }, &[(seg, Part::Smooth, panels)], 0))
}

fn ellipse_site(a: f64, b: f64, t: f64) -> (Site, f64) {
    let (s, c) = t.sin_cos();
    let speed = (a * a * s * s + b * b * c * c).sqrt();
    let site = Site {
        point: Point::new(a * c, b * s),
        normal: Point::new(b * c, a * s) / speed,
        curvature: a * b / speed.powi(3),
    };
    (site, speed)
}

/// Panel breakpoints on `[0, 1]`: `base` uniform panels whose two end panels
/// are split dyadically `levels` times.
fn breakpoints(base: usize, levels: usize) -> Vec<f64> {
    let h = 1.0 / base as f64;
    let mut left = vec![0.0];
    for l in (1..=levels).rev() {
        left.push(h / (1u64 << l) as f64);
    }
    let mut pts = left.clone();
    for i in 1..base {
        pts.push(i as f64 * h);
    }
    for v in left.iter().rev() {
        pts.push(1.0 - v);
    }
    if levels == 0 {
        pts.dedup();
    }
    pts
}

impl Boundary {
    fn from_segments(shape: Shape, segments: &[(Segment, Part, usize)], levels: usize) -> Boundary {
        let (gx, gw) = gl16();
        let mut panels = Vec::new();
        let mut bd = Boundary {
            shape,
            layout: Layout::Periodic,
            points: vec![],
            normals: vec![],
            curvature: vec![],
            weights: vec![],
            parts: vec![],
            params: vec![],
            panel_of: vec![],
        };
        for &(segment, part, base) in segments {
            let br = breakpoints(base, levels);
            for w in br.windows(2) {
                let panel = Panel { segment, s0: w[0], s1: w[1], part, first: bd.points.len() };
                let speed = panel.speed();
                for (u, wu) in gx.iter().zip(gw) {
                    let site = panel.site(*u);
                    bd.points.push(site.point);
                    bd.normals.push(site.normal);
                    bd.curvature.push(site.curvature);
                    bd.weights.push(wu * speed);
                    bd.parts.push(part);
                    bd.params.push(*u);
                    bd.panel_of.push(panels.len());
                }
                panels.push(panel);
            }
        }
        bd.layout = Layout::Panels(panels);
        bd
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn site(&self, i: usize) -> Site {
        Site { point: self.points[i], normal: self.normals[i], curvature: self.curvature[i] }
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Signed enclosed area, `(1/2) * integral of x . nu`.
    pub fn area(&self) -> f64 {
        0.5 * self.points.iter().zip(&self.normals).zip(&self.weights).map(|((x, n), w)| w * x.dot(n)).sum::<f64>()
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Stadium { length, half_width } => length + 2.0 * half_width,
            Shape::Ellipse { a, b } => 2.0 * a.max(b),
        }
    }

    /// Rod parameters `(L, delta)`, if the boundary is a rod.
    pub fn rod(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Stadium { length, half_width } => Some((length, half_width)),
            Shape::Ellipse { .. } => None,
        }
    }

    pub fn panels(&self) -> Option<&[Panel]> {
        match &self.layout {
            Layout::Panels(p) => Some(p),
            Layout::Periodic => None,
        }
    }

    /// Typical node spacing around node `i`.
    pub fn local_spacing(&self, i: usize) -> f64 {
        match &self.layout {
            Layout::Panels(p) => p[self.panel_of[i]].length() / PANEL_ORDER as f64,
            Layout::Periodic => self.weights[i],
        }
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.len()).map(|i| self.local_spacing(i)).fold(0.0, f64::max)
    }

    /// Error unless `x` is farther than `factor` local spacings from every node.
    pub fn check_far(&self, x: &Point, factor: f64) -> Result<()> {
        for i in 0..self.len() {
            let d = (x - self.points[i]).norm();
            let limit = factor * self.local_spacing(i);
            if d <= limit {
                return Err(Error::NearBoundary { distance: d, limit });
            }
        }
        Ok(())
    }

    /// Whether `x` lies inside the boundary.
    pub fn contains(&self, x: &Point) -> bool {
        match self.shape {
            Shape::Stadium { length, half_width } => (x - project_to_spine(x, length)).norm() < half_width,
            Shape::Ellipse { a, b } => (x.x / a).powi(2) + (x.y / b).powi(2) < 1.0,
        }
    }

    /// Distance from `x` to the continuous curve.
    pub fn distance(&self, x: &Point) -> f64 {
        match self.shape {
            Shape::Stadium { length, half_width } => ((x - project_to_spine(x, length)).norm() - half_width).abs(),
            Shape::Ellipse { .. } => {
                (0..self.patch_count()).map(|p| self.patch_closest(p, x).1).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: &Point) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, y) in self.points.iter().enumerate() {
            let d = (x - y).norm_squared();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Node index of the mirror image of each node under `x1 -> -x1`
    /// (`axis == 0`) or `x2 -> -x2` (`axis == 1`).
    /// Arc length from node `i` to the nearest end of its part; infinite on
    /// smooth periodic curves.
    pub fn junction_distance(&self, i: usize) -> f64 {
        match &self.layout {
            Layout::Panels(panels) => {
                let panel = &panels[self.panel_of[i]];
                if panel.part == Part::Smooth {
                    return f64::INFINITY;
                }
                let s = panel.fraction(self.params[i]);
                panel.segment.length() * s.min(1.0 - s)
            }
            Layout::Periodic => f64::INFINITY,
        }
    }

    pub fn mirror_map(&self, axis: usize) -> Vec<usize> {
        self.points
            .iter()
            .map(|p| {
                let mut q = *p;
                q[axis] = -q[axis];
                self.nearest_node(&q)
            })
            .collect()
    }

    // Patches are the parameter intervals used for accurate evaluation of
    // boundary integrals at arbitrary targets: the panels themselves, or
    // equal slices of the periodic parameter.

    pub fn patch_count(&self) -> usize {
        match &self.layout {
            Layout::Panels(p) => p.len(),
            Layout::Periodic => self.len().div_ceil(PANEL_ORDER),
        }
    }

    pub fn patch_bounds(&self, p: usize) -> (f64, f64) {
        match &self.layout {
            Layout::Panels(_) => (-1.0, 1.0),
            Layout::Periodic => {
                let m = self.patch_count() as f64;
                (2.0 * PI * p as f64 / m, 2.0 * PI * (p + 1) as f64 / m)
            }
        }
    }

    /// Geometry and arc-length speed at parameter `t` of patch `p`.
    pub fn patch_site(&self, p: usize, t: f64) -> (Site, f64) {
        match (&self.layout, &self.shape) {
            (Layout::Panels(panels), _) => (panels[p].site(t), panels[p].speed()),
            (Layout::Periodic, Shape::Ellipse { a, b }) => ellipse_site(*a, *b, t),
            (Layout::Periodic, Shape::Stadium { .. }) => unreachable!("rods are always paneled"),
        }
    }

    pub fn patch_length(&self, p: usize) -> f64 {
        match &self.layout {
            Layout::Panels(panels) => panels[p].length(),
            Layout::Periodic => {
                let (t0, t1) = self.patch_bounds(p);
                let (gx, gw) = gl16();
                gx.iter()
                    .zip(gw)
                    .map(|(u, w)| {
                        let t = t0 + (t1 - t0) * 0.5 * (u + 1.0);
                        w * 0.5 * (t1 - t0) * self.patch_site(p, t).1
                    })
                    .sum()
            }
        }
    }

    /// Parameter and distance of the patch point closest to `x`.
    pub fn patch_closest(&self, p: usize, x: &Point) -> (f64, f64) {
        match &self.layout {
            Layout::Panels(panels) => panels[p].closest(x),
            Layout::Periodic => {
                let (t0, t1) = self.patch_bounds(p);
                let dist = |t: f64| (self.patch_site(p, t).0.point - x).norm();
                let samples = 64;
                let mut best = (t0, dist(t0));
                for k in 1..=samples {
                    let t = t0 + (t1 - t0) * k as f64 / samples as f64;
                    let d = dist(t);
                    if d < best.1 {
                        best = (t, d);
                    }
                }
                // Golden-section refinement around the best sample.
                let h = (t1 - t0) / samples as f64;
                let (mut lo, mut hi) = ((best.0 - h).max(t0), (best.0 + h).min(t1));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let a = hi - g * (hi - lo);
                    let b = lo + g * (hi - lo);
                    if dist(a) < dist(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                let t = 0.5 * (lo + hi);
                (t, dist(t))
            }
        }
    }

    /// Interpolate nodal `values` at parameter `t` of patch `p`.
    pub fn patch_density(&self, p: usize, t: f64, values: &[Complex64]) -> Complex64 {
        match &self.layout {
            Layout::Panels(panels) => {
                let (gx, _) = gl16();
                let bary = panel_barycentric();
                let mut basis = [0.0; PANEL_ORDER];
                lagrange_basis(gx, bary, t, &mut basis);
                let first = panels[p].first;
                basis.iter().zip(&values[first..first + PANEL_ORDER]).map(|(b, v)| v * b).sum()
            }
            Layout::Periodic => trig_interpolate(&self.params, values, t),
        }
    }
}

fn panel_barycentric() -> &'static Vec<f64> {
    static W: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    W.get_or_init(|| barycentric_weights(&gl16().0))
}

/// Barycentric trigonometric interpolation on an even number of equispaced nodes.
fn trig_interpolate(nodes: &[f64], values: &[Complex64], t: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (j, (&tj, v)) in nodes.iter().zip(values).enumerate() {
        let half = 0.5 * (t - tj);
        let s = half.sin();
        if s.abs() < 1e-15 {
            return *v;
        }
        let c = if j % 2 == 0 { 1.0 } else { -1.0 } * half.cos() / s;
        num += v * c;
        den += c;
    }
    num / den
}

/// Closest point of the spine segment `[-L/2, L/2] x {0}`.
pub fn project_to_spine(x: &Point, length: f64) -> Point {
    Point::new(x.x.clamp(-0.5 * length, 0.5 * length), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arc_length_oracle(a: f64, b: f64) -> f64 {
        // Composite Simpson with heavy refinement, independent of the trapezoid rule.
        let n = 200_000;
        let h = 2.0 * PI / n as f64;
        let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let mut s = f(0.0) + f(2.0 * PI);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn rod_perimeter_area_and_flats() {
        let rod = build_nanorod(1.0, 0.05, 512).unwrap();
        assert!(rod.len() >= 512);
        let p = 2.0 + 2.0 * PI * 0.05;
        assert!((rod.perimeter() - p).abs() / p < 1e-10);
        let area = PI * 0.05f64.powi(2) + 2.0 * 0.05;
        assert!((rod.area() - area).abs() < 1e-8);
        for i in 0..rod.len() {
            assert!((rod.normals[i].norm() - 1.0).abs() < 1e-12);
            match rod.parts[i] {
                Part::LowerFlat => assert_eq!(rod.points[i].y, -0.05),
                Part::UpperFlat => assert_eq!(rod.points[i].y, 0.05),
                Part::LeftCap | Part::RightCap => assert!((rod.curvature[i] - 20.0).abs() < 1e-9),
                Part::Smooth => unreachable!(),
            }
        }
        for part in [Part::LeftCap, Part::LowerFlat, Part::RightCap, Part::UpperFlat] {
            assert!(rod.parts.iter().filter(|&&q| q == part).count() >= 16);
        }
    }

    #[test]
    fn rod_rejects_thick_delta() {
        assert!(build_nanorod(1.0, 0.6, 512).is_err());
        assert!(build_nanorod(1.0, 0.5, 512).is_err());
    }

    #[test]
    fn disk_weights_and_normals() {
        let d = build_disk(1.0, 256).unwrap();
        assert!((d.perimeter() - 2.0 * PI).abs() < 1e-12);
        for i in 0..d.len() {
            assert!((d.normals[i] - d.points[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn ellipse_arc_length_matches_oracle() {
        let e = build_ellipse(2.0, 1.0, 256).unwrap();
        let oracle = arc_length_oracle(2.0, 1.0);
        assert!((e.perimeter() - oracle).abs() / oracle < 1e-10);
    }

    #[test]
    fn round_ellipse_is_the_disk() {
        let e = build_ellipse(1.0, 1.0, 128).unwrap();
        let d = build_disk(1.0, 128).unwrap();
        assert_eq!(e.points, d.points);
        assert_eq!(e.weights, d.weights);
    }

    #[test]
    fn counterclockwise_orientation() {
        let rod = build_nanorod(1.0, 0.1, 256).unwrap();
        let mut turn = 0.0;
        for i in 0..rod.len() {
            let a = rod.points[i];
            let b = rod.points[(i + 1) % rod.len()];
            turn += a.x * b.y - a.y * b.x;
        }
        assert!(turn > 0.0);
    }

    #[test]
    fn mirror_maps_are_exact() {
        let rod = build_nanorod(1.0, 0.05, 512).unwrap();
        for axis in 0..2 {
            let m = rod.mirror_map(axis);
            for i in 0..rod.len() {
                let mut q = rod.points[i];
                q[axis] = -q[axis];
                assert!((rod.points[m[i]] - q).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn patch_interpolation_is_exact_for_smooth_data() {
        let rod = build_nanorod(1.0, 0.1, 256).unwrap();
        let vals: Vec<Complex64> = rod.points.iter().map(|p| Complex64::new(p.x * p.x, p.y)).collect();
        let panels = rod.panels().unwrap();
        for (p, panel) in panels.iter().enumerate().step_by(5) {
            let x = panel.site(0.37).point;
            let v = rod.patch_density(p, 0.37, &vals);
            assert!((v - Complex64::new(x.x * x.x, x.y)).norm() < 1e-12);
        }
        let d = build_disk(1.0, 64).unwrap();
        let vals: Vec<Complex64> = d.params.iter().map(|t| Complex64::new((3.0 * t).cos(), 0.0)).collect();
        let v = d.patch_density(1, 0.5, &vals);
        assert!((v.re - 1.5f64.cos()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spine_projection_is_clamped(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64, l in 0.1..4.0f64) {
            let p = project_to_spine(&Point::new(x1, x2), l);
            prop_assert_eq!(p.y, 0.0);
            prop_assert!(p.x.abs() <= 0.5 * l);
            if x1.abs() <= 0.5 * l { prop_assert_eq!(p.x, x1); }
        }

        #[test]
        fn rod_invariants(l in 0.5..3.0f64, frac in 0.02..0.45f64, n in 64usize..400) {
            let delta = frac * l;
            let rod = build_nanorod(l, delta, n).unwrap();
            prop_assert!(rod.len() >= n);
            let p = 2.0 * l + 2.0 * PI * delta;
            prop_assert!((rod.perimeter() - p).abs() / p < 1e-10);
            prop_assert!((rod.area() - (PI * delta * delta + 2.0 * l * delta)).abs() < 1e-8 * l * l);
            for i in 0..rod.len() {
                let x = rod.points[i];
                let spine = project_to_spine(&x, l);
                prop_assert!(((x - spine).norm() - delta).abs() < 1e-12);
            }
        }
    }
}
