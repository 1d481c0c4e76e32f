//! Deterministic synthetic point clouds: analytic fields sampled on void, quadrant-gradient
//! and hole layouts.
//!
//! Every generator draws from a ChaCha8 stream seeded with the layout's seed. Each candidate
//! point consumes exactly `d + 1` uniforms: its coordinates in dimension order, then one
//! acceptance draw, whether or not the layout needs it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fitting::PointCloud;
use crate::splinecore::DomainBox;

/// Unnormalized sinc, `sin(t) / t` with `sinc(0) = 1`.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

/// `sinc(x^2 + y^2) * sinc(2 (x - 2)^2 + (y + 2)^2)`
pub fn polysinc(x: f64, y: f64) -> f64 {
    sinc(x * x + y * y) * sinc(2.0 * (x - 2.0).powi(2) + (y + 2.0).powi(2))
}

/// Gentle 2D field with values in roughly `[-2, 10]`.
pub fn smooth(x: f64, y: f64) -> f64 {
    4.0 + 3.0 * (x / 2.0).sin() + 3.0 * (y / 3.0).cos()
}

/// Six Gaussian pins on a ring of radius 0.5 about the `z` axis, modulated along `z`.
pub fn pins(x: f64, y: f64, z: f64) -> f64 {
    let width = 0.15f64;
    let ring: f64 = (0..6)
        .map(|k| {
            let a = k as f64 * PI / 3.0;
            let (cx, cy) = (0.5 * a.cos(), 0.5 * a.sin());
            (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * width * width)).exp()
        })
        .sum();
    ring * (0.75 + 0.25 * (PI * z).cos())
}

/// Named analytic fields usable as data sources and error references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Polysinc,
    Smooth,
    Pins,
}

impl Field {
    pub fn dim(self) -> usize {
        match self {
            Field::Polysinc | Field::Smooth => 2,
            Field::Pins => 3,
        }
    }

    /// Evaluates at a physical point; `x` must have [`Field::dim`] entries.
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Field::Polysinc => polysinc(x[0], x[1]),
            Field::Smooth => smooth(x[0], x[1]),
            Field::Pins => pins(x[0], x[1], x[2]),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Polysinc => "polysinc",
            Field::Smooth => "smooth",
            Field::Pins => "pins",
        })
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polysinc" => Ok(Field::Polysinc),
            "smooth" => Ok(Field::Smooth),
            "pins" => Ok(Field::Pins),
            _ => Err(Error::InvalidConfig(format!("unknown analytic field '{s}'"))),
        }
    }
}

/// `[-4 pi, 4 pi]^2`
pub fn polysinc_domain() -> DomainBox {
    let l = 4.0 * PI;
    DomainBox::new(vec![-l, -l], vec![l, l]).expect("valid box")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, x: &[f64]) -> bool {
        (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2) <= self.radius * self.radius
    }

    pub fn bounding_box(&self) -> DomainBox {
        let [cx, cy] = self.center;
        let r = self.radius;
        DomainBox::new(vec![cx - r, cy - r], vec![cx + r, cy + r]).expect("valid box")
    }
}

/// Four disks of radius `pi` at `(+-2 pi, +-2 pi)`.
pub fn default_voids() -> Vec<Disk> {
    let c = 2.0 * PI;
    [[-c, -c], [c, -c], [-c, c], [c, c]]
        .into_iter()
        .map(|center| Disk { center, radius: PI })
        .collect()
}

/// Box around the two lower voids of [`default_voids`], dilated by `pi / 2`.
pub fn default_void_error_box() -> DomainBox {
    let v = default_voids();
    let a = v[0].bounding_box();
    let b = v[1].bounding_box();
    let lower = (0..2).map(|k| a.lower()[k].min(b.lower()[k])).collect();
    let upper = (0..2).map(|k| a.upper()[k].max(b.upper()[k])).collect();
    DomainBox::new(lower, upper).expect("valid box").dilate(PI / 2.0)
}

/// Uniform sampling with thinned disks.
#[derive(Debug, Clone, PartialEq)]
pub struct VoidsSpec {
    pub domain: DomainBox,
    pub points: usize,
    pub seed: u64,
    pub voids: Vec<Disk>,
    /// Acceptance probability inside a void, in `(0, 1]`.
    pub sparsity: f64,
    pub field: Field,
}

impl Default for VoidsSpec {
    fn default() -> Self {
        Self {
            domain: polysinc_domain(),
            points: 40_000,
            seed: 0,
            voids: default_voids(),
            sparsity: 1.0,
            field: Field::Polysinc,
        }
    }
}

/// Per-quadrant uniform sampling with fixed count shares.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantSpec {
    pub domain: DomainBox,
    pub points: usize,
    pub seed: u64,
    /// Shares of the quadrants `(+,+)`, `(-,+)`, `(-,-)`, `(+,-)` relative to the box center.
    pub shares: [f64; 4],
    /// Side of a square at the `(+,+)` corner of the box that receives no points.
    pub empty_corner: f64,
    pub field: Field,
}

impl Default for QuadrantSpec {
    fn default() -> Self {
        Self {
            domain: polysinc_domain(),
            points: 22_500,
            seed: 0,
            shares: [0.04, 0.24, 0.48, 0.24],
            empty_corner: 2.0 * PI,
            field: Field::Polysinc,
        }
    }
}

/// Region removed from the sampling domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Hole {
    None,
    /// Points within the disk are rejected (2D).
    Disk(Disk),
    /// Points outside the vertical prism over a flat-topped hexagon are rejected (3D).
    OutsideHexPrism { center: [f64; 2], circumradius: f64 },
}

impl Hole {
    pub fn rejects(&self, x: &[f64]) -> bool {
        match self {
            Hole::None => false,
            Hole::Disk(d) => d.radius > 0.0 && d.contains(x),
            Hole::OutsideHexPrism {
                center,
                circumradius,
            } => !in_hexagon(x[0] - center[0], x[1] - center[1], *circumradius),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Hole::None => None,
            Hole::Disk(_) => Some(2),
            Hole::OutsideHexPrism { .. } => Some(3),
        }
    }
}

/// Flat-topped regular hexagon with the given circumradius, centered at the origin.
pub fn in_hexagon(dx: f64, dy: f64, r: f64) -> bool {
    let h = r * 3f64.sqrt() / 2.0;
    dy.abs() <= h && 3f64.sqrt() * dx.abs() + dy.abs() <= 3f64.sqrt() * r
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleSpec {
    pub domain: DomainBox,
    pub points: usize,
    pub seed: u64,
    pub hole: Hole,
    pub field: Field,
}

impl HoleSpec {
    /// `[-10, 10]^2` with a central disk hole of radius 5, sampling the smooth field.
    pub fn disk_default() -> Self {
        Self {
            domain: DomainBox::new(vec![-10.0, -10.0], vec![10.0, 10.0]).expect("valid box"),
            points: 20_000,
            seed: 0,
            hole: Hole::Disk(Disk {
                center: [0.0, 0.0],
                radius: 5.0,
            }),
            field: Field::Smooth,
        }
    }

    /// Hexagonal prism of circumradius 1 inside its bounding box `[-1,1] x [-sqrt3/2, sqrt3/2] x [0,1]`.
    pub fn hex_prism_default() -> Self {
        let h = 3f64.sqrt() / 2.0;
        Self {
            domain: DomainBox::new(vec![-1.0, -h, 0.0], vec![1.0, h, 1.0]).expect("valid box"),
            points: 60_000,
            seed: 0,
            hole: Hole::OutsideHexPrism {
                center: [0.0, 0.0],
                circumradius: 1.0,
            },
            field: Field::Pins,
        }
    }
}

fn check_common(domain: &DomainBox, points: usize, field: Field) -> Result<()> {
    domain.require_positive_widths()?;
    if points == 0 {
        return Err(Error::InvalidConfig("point count must be positive".into()));
    }
    if domain.dim() != field.dim() {
        return Err(Error::InvalidConfig(format!(
            "field {field} is {}-dimensional but the domain is {}-dimensional",
            field.dim(),
            domain.dim()
        )));
    }
    Ok(())
}

struct Sampler {
    rng: ChaCha8Rng,
    coords: Vec<f64>,
    values: Vec<f64>,
    field: Field,
}

impl Sampler {
    fn new(seed: u64, field: Field, capacity: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            coords: Vec::with_capacity(capacity * field.dim()),
            values: Vec::with_capacity(capacity),
            field,
        }
    }

    /// Draws one candidate in `bx`; returns it with its acceptance uniform.
    fn candidate(&mut self, bx: &DomainBox) -> (Vec<f64>, f64) {
        let x = (0..bx.dim())
            .map(|k| bx.lower()[k] + self.rng.random::<f64>() * bx.width(k))
            .collect();
        (x, self.rng.random::<f64>())
    }

    fn keep(&mut self, x: Vec<f64>) {
        self.values.push(self.field.eval(&x));
        self.coords.extend(x);
    }

    fn count(&self) -> usize {
        self.values.len()
    }

    fn finish(self) -> Result<PointCloud> {
        let m = self.values.len();
        let d = self.field.dim();
        PointCloud::new(
            Array2::from_shape_vec((m, d), self.coords).expect("consistent shape"),
            Array2::from_shape_vec((m, 1), self.values).expect("consistent shape"),
        )
    }
}

/// Uniform points; a candidate inside any void survives with probability `sparsity`.
pub fn sample_voids(spec: &VoidsSpec) -> Result<PointCloud> {
    check_common(&spec.domain, spec.points, spec.field)?;
    if !(spec.sparsity > 0.0 && spec.sparsity <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sparsity {} outside (0, 1]",
            spec.sparsity
        )));
    }
    if spec.domain.dim() != 2 {
        return Err(Error::InvalidConfig("void layouts are two-dimensional".into()));
    }
    let mut s = Sampler::new(spec.seed, spec.field, spec.points);
    while s.count() < spec.points {
        let (x, accept) = s.candidate(&spec.domain);
        let in_void = spec.voids.iter().any(|v| v.contains(&x));
        if !in_void || accept < spec.sparsity {
            s.keep(x);
        }
    }
    s.finish()
}

/// Splits `m` by `shares` with the largest-remainder rule; ties go to the earlier share.
pub fn allocate(m: usize, shares: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = shares.iter().map(|s| s * m as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = m.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Quadrant boxes in share order `(+,+)`, `(-,+)`, `(-,-)`, `(+,-)`.
pub fn quadrant_boxes(domain: &DomainBox) -> [DomainBox; 4] {
    let (lo, hi) = (domain.lower(), domain.upper());
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mk = |x0: f64, x1: f64, y0: f64, y1: f64| DomainBox::new(vec![x0, y0], vec![x1, y1]).expect("valid box");
    [
        mk(mid[0], hi[0], mid[1], hi[1]),
        mk(lo[0], mid[0], mid[1], hi[1]),
        mk(lo[0], mid[0], lo[1], mid[1]),
        mk(mid[0], hi[0], lo[1], mid[1]),
    ]
}

/// The square of side `side` at the `(+,+)` corner of `domain`.
pub fn corner_box(domain: &DomainBox, side: f64) -> Option<DomainBox> {
    (side > 0.0).then(|| {
        let hi = domain.upper();
        DomainBox::new(vec![hi[0] - side, hi[1] - side], hi.to_vec()).expect("valid box")
    })
}

pub fn sample_quadrant_gradient(spec: &QuadrantSpec) -> Result<PointCloud> {
    check_common(&spec.domain, spec.points, spec.field)?;
    if spec.domain.dim() != 2 {
        return Err(Error::InvalidConfig("quadrant layouts are two-dimensional".into()));
    }
    if spec.shares.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidConfig("quadrant shares must be positive".into()));
    }
    let total: f64 = spec.shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("quadrant shares sum to {total}, not 1")));
    }
    let quads = quadrant_boxes(&spec.domain);
    if !(spec.empty_corner >= 0.0) || spec.empty_corner >= quads[0].width(0).min(quads[0].width(1)) {
        return Err(Error::InvalidConfig(
            "empty corner must be smaller than a quadrant".into(),
        ));
    }
    let corner = corner_box(&spec.domain, spec.empty_corner);
    let counts = allocate(spec.points, &spec.shares);
    let mut s = Sampler::new(spec.seed, spec.field, spec.points);
    for (q, &c) in quads.iter().zip(&counts) {
        let target = s.count() + c;
        while s.count() < target {
            let (x, _) = s.candidate(q);
            if corner.as_ref().is_none_or(|b| !b.contains(&x)) {
                s.keep(x);
            }
        }
    }
    s.finish()
}

pub fn sample_with_hole(spec: &HoleSpec) -> Result<PointCloud> {
    check_common(&spec.domain, spec.points, spec.field)?;
    if let Some(d) = spec.hole.dim() {
        if d != spec.domain.dim() {
            return Err(Error::InvalidConfig(format!(
                "hole is {d}-dimensional but the domain is {}-dimensional",
                spec.domain.dim()
            )));
        }
    }
    // Probe a lattice so a mask covering everything fails fast instead of looping.
    let probe = 33usize;
    let d = spec.domain.dim();
    let total = probe.pow(d as u32);
    let any_open = (0..total).any(|mut i| {
        let x: Vec<f64> = (0..d)
            .map(|k| {
                let a = i % probe;
                i /= probe;
                spec.domain.lower()[k] + spec.domain.width(k) * a as f64 / (probe - 1) as f64
            })
            .collect();
        !spec.hole.rejects(&x)
    });
    if !any_open {
        return Err(Error::InvalidConfig("the hole covers the whole domain".into()));
    }
    let mut s = Sampler::new(spec.seed, spec.field, spec.points);
    while s.count() < spec.points {
        let (x, _) = s.candidate(&spec.domain);
        if !spec.hole.rejects(&x) {
            s.keep(x);
        }
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polysinc_values() {
        // independent: the second factor vanishes to sinc(0) at (2, -2)
        let expect = 8f64.sin() / 8.0;
        assert!((polysinc(2.0, -2.0) - expect).abs() < 1e-15);
        assert!((polysinc(2.0, -2.0) - 0.123670).abs() < 5e-7);
        assert!((polysinc(0.0, 0.0) - 12f64.sin() / 12.0).abs() < 1e-15);
        assert!((polysinc(0.0, 0.0) + 0.044714).abs() < 5e-7);
    }

    #[test]
    fn allocation_is_exact() {
        assert_eq!(allocate(22_500, &[0.1, 0.2, 0.3, 0.4]), vec![2250, 4500, 6750, 9000]);
        assert_eq!(allocate(10, &[1.0 / 3.0; 3]), vec![4, 3, 3]);
        assert_eq!(allocate(7, &[0.25; 4]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn quadrant_counts_and_corner() {
        let spec = QuadrantSpec {
            points: 2000,
            shares: [0.1, 0.2, 0.3, 0.4],
            ..QuadrantSpec::default()
        };
        let cloud = sample_quadrant_gradient(&spec).unwrap();
        let mut counts = [0; 4];
        let corner = corner_box(&spec.domain, spec.empty_corner).unwrap();
        for r in cloud.coords().rows() {
            let q = match (r[0] >= 0.0, r[1] >= 0.0) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            counts[q] += 1;
            assert!(!corner.contains(&r.to_vec()));
        }
        assert_eq!(counts, [200, 400, 600, 800]);
        let bad = QuadrantSpec {
            shares: [0.1, 0.2, 0.3, 0.3],
            ..QuadrantSpec::default()
        };
        assert!(sample_quadrant_gradient(&bad).is_err());
    }

    #[test]
    fn voids_validation_and_determinism() {
        let spec = VoidsSpec {
            points: 500,
            sparsity: 0.5,
            seed: 3,
            ..VoidsSpec::default()
        };
        assert_eq!(sample_voids(&spec).unwrap(), sample_voids(&spec).unwrap());
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(sample_voids(&VoidsSpec { sparsity: bad, ..spec.clone() }).is_err());
        }
    }

    #[test]
    fn disk_hole_is_empty() {
        let spec = HoleSpec {
            points: 3000,
            ..HoleSpec::disk_default()
        };
        let cloud = sample_with_hole(&spec).unwrap();
        for r in cloud.coords().rows() {
            assert!(r[0].hypot(r[1]) > 5.0);
        }
        let zero = HoleSpec {
            hole: Hole::Disk(Disk {
                center: [0.0, 0.0],
                radius: 0.0,
            }),
            ..spec.clone()
        };
        let none = HoleSpec {
            hole: Hole::None,
            ..spec.clone()
        };
        assert_eq!(sample_with_hole(&zero).unwrap(), sample_with_hole(&none).unwrap());
        let all = HoleSpec {
            hole: Hole::Disk(Disk {
                center: [0.0, 0.0],
                radius: 100.0,
            }),
            ..spec
        };
        assert!(sample_with_hole(&all).is_err());
    }

    #[test]
    fn hexagon_geometry() {
        let r = 1.0;
        assert!(in_hexagon(0.0, 0.0, r));
        assert!(in_hexagon(1.0, 0.0, r));
        assert!(in_hexagon(0.5, 3f64.sqrt() / 2.0, r));
        assert!(!in_hexagon(0.9, 0.8, r));
        assert!(!in_hexagon(0.0, 0.9, r));
    }

    #[test]
    fn field_names_round_trip() {
        for f in [Field::Polysinc, Field::Smooth, Field::Pins] {
            assert_eq!(f.to_string().parse::<Field>().unwrap(), f);
        }
        assert!("nope".parse::<Field>().is_err());
    }
}
