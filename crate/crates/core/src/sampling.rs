//! Sampling regions and reproducible point sets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Point3;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DomainError {
    #[error("malformed domain '{0}': expected box:6, ball:4, shell:5 or cylshell:4 numbers")]
    Syntax(String),
    #[error("domain has an empty interior: {0}")]
    Empty(String),
    #[error("sampling accepted {accepted} of {requested} points after {attempts} draws")]
    Starved {
        requested: usize,
        accepted: usize,
        attempts: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    Ball {
        center: [f64; 3],
        radius: f64,
    },
    Shell {
        center: [f64; 3],
        inner: f64,
        outer: f64,
    },
    /// `inner ≤ √(x²+y²) ≤ outer`, `zmin ≤ z ≤ zmax`.
    CylShell {
        inner: f64,
        outer: f64,
        zmin: f64,
        zmax: f64,
    },
}

/// Closed region removed from a shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exclusion {
    /// `√(x²+y²) ≤ radius`.
    ZAxisCylinder {
        radius: f64,
    },
    /// `lo ≤ x_axis ≤ hi`.
    Slab {
        axis: usize,
        lo: f64,
        hi: f64,
    },
    Ball {
        center: [f64; 3],
        radius: f64,
    },
}

impl Exclusion {
    pub fn contains(&self, p: Point3) -> bool {
        let a = p.to_array();
        match self {
            Exclusion::ZAxisCylinder { radius } => a[0].hypot(a[1]) <= *radius,
            Exclusion::Slab { axis, lo, hi } => (*lo..=*hi).contains(&a[*axis]),
            Exclusion::Ball { center, radius } => dist(a, *center) <= *radius,
        }
    }
}

/// Lower-dimensional set on which a field is singular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularSet {
    ZAxis,
    /// The plane `x_axis = value`.
    Plane {
        axis: usize,
        value: f64,
    },
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
}

impl DomainSpec {
    pub fn new(shape: Shape) -> Self {
        DomainSpec {
            shape,
            exclusions: Vec::new(),
        }
    }

    pub fn unit_ball() -> Self {
        Self::ball([0.0; 3], 1.0)
    }

    pub fn ball(center: [f64; 3], radius: f64) -> Self {
        Self::new(Shape::Ball { center, radius })
    }

    pub fn boxed(min: [f64; 3], max: [f64; 3]) -> Self {
        Self::new(Shape::Box { min, max })
    }

    pub fn shell(center: [f64; 3], inner: f64, outer: f64) -> Self {
        Self::new(Shape::Shell { center, inner, outer })
    }

    pub fn cyl_shell(inner: f64, outer: f64, zmin: f64, zmax: f64) -> Self {
        Self::new(Shape::CylShell {
            inner,
            outer,
            zmin,
            zmax,
        })
    }

    pub fn excluding(mut self, e: Exclusion) -> Self {
        self.exclusions.push(e);
        self
    }

    pub fn in_shape(&self, p: Point3) -> bool {
        let a = p.to_array();
        match &self.shape {
            Shape::Box { min, max } => (0..3).all(|i| min[i] <= a[i] && a[i] <= max[i]),
            Shape::Ball { center, radius } => dist(a, *center) < *radius,
            Shape::Shell { center, inner, outer } => {
                let r = dist(a, *center);
                *inner <= r && r <= *outer
            }
            Shape::CylShell {
                inner,
                outer,
                zmin,
                zmax,
            } => {
                let r = a[0].hypot(a[1]);
                *inner <= r && r <= *outer && *zmin <= a[2] && a[2] <= *zmax
            }
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.is_finite() && self.in_shape(p) && !self.exclusions.iter().any(|e| e.contains(p))
    }

    /// Axis-aligned bounding box of the shape.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        match &self.shape {
            Shape::Box { min, max } => (*min, *max),
            Shape::Ball { center, radius } => (center.map(|c| c - radius), center.map(|c| c + radius)),
            Shape::Shell { center, outer, .. } => (center.map(|c| c - outer), center.map(|c| c + outer)),
            Shape::CylShell { outer, zmin, zmax, .. } => ([-outer, -outer, *zmin], [*outer, *outer, *zmax]),
        }
    }

    /// Center used for rigid motions that map the shape to itself.
    pub fn center(&self) -> [f64; 3] {
        match &self.shape {
            Shape::Ball { center, .. } | Shape::Shell { center, .. } => *center,
            Shape::Box { min, max } => std::array::from_fn(|i| 0.5 * (min[i] + max[i])),
            Shape::CylShell { zmin, zmax, .. } => [0.0, 0.0, 0.5 * (zmin + zmax)],
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let ok = match &self.shape {
            Shape::Box { min, max } => (0..3).all(|i| min[i] < max[i]),
            Shape::Ball { radius, .. } => *radius > 0.0,
            Shape::Shell { inner, outer, .. } => *inner >= 0.0 && inner < outer,
            Shape::CylShell {
                inner,
                outer,
                zmin,
                zmax,
            } => *inner >= 0.0 && inner < outer && zmin < zmax,
        };
        let finite = {
            let (lo, hi) = self.bounds();
            lo.iter().chain(hi.iter()).all(|v| v.is_finite())
        };
        if !ok || !finite {
            return Err(DomainError::Empty(self.to_string()));
        }
        let probe = SampleSet::halton(self, 64, 0);
        if probe.is_err() {
            return Err(DomainError::Empty(format!("{self}: exclusions cover the shape")));
        }
        Ok(())
    }

    /// Whether the singular set has points inside this domain; tested on a
    /// fine grid along the set.
    pub fn meets(&self, set: &SingularSet) -> bool {
        let (lo, hi) = self.bounds();
        const N: usize = 400;
        let lerp = |i: usize, k: usize| lo[k] + (hi[k] - lo[k]) * (i as f64 + 0.5) / N as f64;
        match set {
            SingularSet::ZAxis => (0..N).any(|i| self.contains(Point3::new(0.0, 0.0, lerp(i, 2)))),
            SingularSet::Plane { axis, value } => {
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                (0..N).any(|i| {
                    (0..N).any(|j| {
                        let mut a = [0.0; 3];
                        a[*axis] = *value;
                        a[u] = lerp(i, u);
                        a[v] = lerp(j, v);
                        self.contains(Point3::from_array(a))
                    })
                })
            }
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Box { min, max } => {
                write!(f, "box:{}", fmt_list(&[min[0], max[0], min[1], max[1], min[2], max[2]]))?
            }
            Shape::Ball { center, radius } => {
                write!(f, "ball:{}", fmt_list(&[center[0], center[1], center[2], *radius]))?
            }
            Shape::Shell { center, inner, outer } => write!(
                f,
                "shell:{}",
                fmt_list(&[center[0], center[1], center[2], *inner, *outer])
            )?,
            Shape::CylShell {
                inner,
                outer,
                zmin,
                zmax,
            } => write!(f, "cylshell:{}", fmt_list(&[*inner, *outer, *zmin, *zmax]))?,
        }
        for e in &self.exclusions {
            match e {
                Exclusion::ZAxisCylinder { radius } => write!(f, "-zcyl:{radius}")?,
                Exclusion::Slab { axis, lo, hi } => write!(f, "-slab:{axis},{lo},{hi}")?,
                Exclusion::Ball { center, radius } => {
                    write!(f, "-ball:{}", fmt_list(&[center[0], center[1], center[2], *radius]))?
                }
            }
        }
        Ok(())
    }
}

impl FromStr for DomainSpec {
    type Err = DomainError;

    /// `box:xmin,xmax,ymin,ymax,zmin,zmax`, `ball:cx,cy,cz,r`,
    /// `shell:cx,cy,cz,rin,rout`, `cylshell:rin,rout,zmin,zmax`, each optionally
    /// followed by exclusions `-zcyl:r`, `-slab:axis,lo,hi`, `-ball:cx,cy,cz,r`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::Syntax(s.to_string());
        let mut parts = split_exclusions(s.trim());
        let head = parts.remove(0);
        let (kind, nums) = parse_part(head).ok_or_else(bad)?;
        let shape = match (kind, nums.len()) {
            ("box", 6) => Shape::Box {
                min: [nums[0], nums[2], nums[4]],
                max: [nums[1], nums[3], nums[5]],
            },
            ("ball", 4) => Shape::Ball {
                center: [nums[0], nums[1], nums[2]],
                radius: nums[3],
            },
            ("shell", 5) => Shape::Shell {
                center: [nums[0], nums[1], nums[2]],
                inner: nums[3],
                outer: nums[4],
            },
            ("cylshell", 4) => Shape::CylShell {
                inner: nums[0],
                outer: nums[1],
                zmin: nums[2],
                zmax: nums[3],
            },
            _ => return Err(bad()),
        };
        let mut d = DomainSpec::new(shape);
        for part in parts {
            let (kind, nums) = parse_part(part).ok_or_else(bad)?;
            d.exclusions.push(match (kind, nums.len()) {
                ("zcyl", 1) => Exclusion::ZAxisCylinder { radius: nums[0] },
                ("slab", 3) if [0.0, 1.0, 2.0].contains(&nums[0]) => Exclusion::Slab {
                    axis: nums[0] as usize,
                    lo: nums[1],
                    hi: nums[2],
                },
                ("ball", 4) => Exclusion::Ball {
                    center: [nums[0], nums[1], nums[2]],
                    radius: nums[3],
                },
                _ => return Err(bad()),
            });
        }
        d.validate()?;
        Ok(d)
    }
}

/// Splits at `-name:` markers; minus signs inside number lists stay put.
fn split_exclusions(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let b = s.as_bytes();
    for i in 1..b.len() {
        if b[i] == b'-' && i + 1 < b.len() && b[i + 1].is_ascii_alphabetic() {
            out.push(&s[start..i]);
            start = i + 1;
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_part(part: &str) -> Option<(&str, Vec<f64>)> {
    let (kind, rest) = part.split_once(':')?;
    let nums = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<_>>>()?;
    Some((kind.trim(), nums))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Radical-inverse sequence in bases 2, 3, 5, started at index `1 + seed`.
    Halton,
    /// ChaCha8 stream seeded with `seed`.
    Random,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Halton => "halton",
            Generator::Random => "random",
        })
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// Points inside a domain (and outside its exclusions), reproducible from
/// `(generator, seed, count, domain)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Point3>,
    pub generator: Generator,
    pub seed: u64,
    pub domain: DomainSpec,
}

const MAX_DRAWS_PER_POINT: usize = 10_000;

impl SampleSet {
    pub fn generate(domain: &DomainSpec, generator: Generator, count: usize, seed: u64) -> Result<Self, DomainError> {
        let (lo, hi) = domain.bounds();
        let at = |u: [f64; 3]| Point3::from_array(std::array::from_fn(|k| lo[k] + (hi[k] - lo[k]) * u[k]));
        let mut points = Vec::with_capacity(count);
        let budget = MAX_DRAWS_PER_POINT * count.max(1);
        let mut attempts = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while points.len() < count && attempts < budget {
            attempts += 1;
            let u = match generator {
                Generator::Halton => {
                    let i = seed + attempts as u64;
                    [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)]
                }
                Generator::Random => [rng.random(), rng.random(), rng.random()],
            };
            let p = at(u);
            if domain.contains(p) {
                points.push(p);
            }
        }
        if points.len() < count {
            return Err(DomainError::Starved {
                requested: count,
                accepted: points.len(),
                attempts,
            });
        }
        Ok(SampleSet {
            points,
            generator,
            seed,
            domain: domain.clone(),
        })
    }

    pub fn halton(domain: &DomainSpec, count: usize, seed: u64) -> Result<Self, DomainError> {
        Self::generate(domain, Generator::Halton, count, seed)
    }

    pub fn random(domain: &DomainSpec, count: usize, seed: u64) -> Result<Self, DomainError> {
        Self::generate(domain, Generator::Random, count, seed)
    }

    /// Explicit points, e.g. interface or boundary samples; the domain is
    /// recorded for provenance only.
    pub fn from_points(points: Vec<Point3>, domain: &DomainSpec) -> Self {
        SampleSet {
            points,
            generator: Generator::Halton,
            seed: 0,
            domain: domain.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies a map to every point, keeping those that stay in the domain.
    pub fn mapped(&self, f: impl Fn(Point3) -> Point3) -> Self {
        SampleSet {
            points: self
                .points
                .iter()
                .map(|p| f(*p))
                .filter(|p| self.domain.contains(*p))
                .collect(),
            ..self.clone()
        }
    }
}

/// Points of the sphere `|x − center| = radius` from a spherical Fibonacci
/// lattice.
pub fn sphere_points(center: [f64; 3], radius: f64, count: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Point3::new(
                center[0] + radius * r * phi.cos(),
                center[1] + radius * r * phi.sin(),
                center[2] + radius * z,
            )
        })
        .collect()
}
