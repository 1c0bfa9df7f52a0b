//! Planar vectors and the two region shapes used throughout the crate.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn abs(self) -> Vec2 {
        Vec2::new(self.x.abs(), self.y.abs())
    }

    pub fn max_elem(self, v: f64) -> Vec2 {
        Vec2::new(self.x.max(v), self.y.max(v))
    }

    pub fn signum(self) -> Vec2 {
        let s = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
        Vec2::new(s(self.x), s(self.y))
    }

    pub fn hadamard(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x * o.x, self.y * o.y)
    }

    /// Radially scales `self` back into the ball of radius `r` if needed.
    pub fn clamp_norm(self, r: f64) -> Vec2 {
        let n = self.norm();
        if n > r && n > 0.0 {
            self * (r / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

/// Signed distance together with its spatial gradient.
///
/// `singular` is set where the gradient is undefined (disk center, rectangle
/// medial axis); the gradient is zero there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSample {
    pub value: f64,
    pub grad: Vec2,
    pub singular: bool,
}

const SINGULAR_EPS: f64 = 1e-12;

/// A region's shape in its local frame (centered at the origin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk { radius: f64 },
    Rect { half_width: f64, half_height: f64 },
}

impl Shape {
    /// Signed distance from local point `p` to the shape boundary
    /// (negative inside).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.distance_sample(p).value
    }

    pub fn distance_sample(&self, p: Vec2) -> DistanceSample {
        match *self {
            Shape::Disk { radius } => {
                let r = p.norm();
                if r < SINGULAR_EPS {
                    DistanceSample {
                        value: -radius,
                        grad: Vec2::ZERO,
                        singular: true,
                    }
                } else {
                    DistanceSample {
                        value: r - radius,
                        grad: p / r,
                        singular: false,
                    }
                }
            }
            Shape::Rect {
                half_width,
                half_height,
            } => {
                let q = p.abs() - Vec2::new(half_width, half_height);
                let outside = q.max_elem(0.0);
                let on = outside.norm();
                if on > 0.0 {
                    DistanceSample {
                        value: on,
                        grad: (outside / on).hadamard(p.signum()),
                        singular: false,
                    }
                } else if (q.x - q.y).abs() < SINGULAR_EPS {
                    DistanceSample {
                        value: q.x.max(q.y),
                        grad: Vec2::ZERO,
                        singular: true,
                    }
                } else if q.x > q.y {
                    DistanceSample {
                        value: q.x,
                        grad: Vec2::new(p.signum().x, 0.0),
                        singular: false,
                    }
                } else {
                    DistanceSample {
                        value: q.y,
                        grad: Vec2::new(0.0, p.signum().y),
                        singular: false,
                    }
                }
            }
        }
    }

    /// The shape eroded by `margin` (never below a tiny positive size).
    pub fn shrunk(&self, margin: f64) -> Shape {
        const MIN: f64 = 1e-6;
        if margin <= 0.0 {
            return *self;
        }
        match *self {
            Shape::Disk { radius } => Shape::Disk {
                radius: (radius - margin).max(MIN),
            },
            Shape::Rect {
                half_width,
                half_height,
            } => Shape::Rect {
                half_width: (half_width - margin).max(MIN),
                half_height: (half_height - margin).max(MIN),
            },
        }
    }

    /// Largest distance from the local origin to a point of the shape.
    pub fn circumradius(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => radius,
            Shape::Rect {
                half_width,
                half_height,
            } => half_width.hypot(half_height),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            Shape::Disk { radius } => radius > 0.0 && radius.is_finite(),
            Shape::Rect {
                half_width,
                half_height,
            } => {
                half_width > 0.0
                    && half_height > 0.0
                    && half_width.is_finite()
                    && half_height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err("shape dimensions must be positive and finite".into())
        }
    }
}

/// `sup_{x in A} inf_{y in B} |x - y|` for shapes placed at `ca` and `cb`,
/// together with its gradient with respect to `ca` (the gradient with respect
/// to `cb` is the negation, since the value depends on `ca - cb` only).
pub fn sup_inf_distance(a: &Shape, ca: Vec2, b: &Shape, cb: Vec2) -> DistanceSample {
    let clamp = |s: DistanceSample| {
        if s.value <= 0.0 {
            DistanceSample {
                value: 0.0,
                grad: Vec2::ZERO,
                singular: false,
            }
        } else {
            s
        }
    };
    match (*a, *b) {
        (Shape::Disk { radius: ra }, Shape::Disk { radius: rb }) => {
            let d = ca - cb;
            let n = d.norm();
            let value = n + ra - rb;
            if value <= 0.0 {
                return clamp(DistanceSample {
                    value,
                    grad: Vec2::ZERO,
                    singular: false,
                });
            }
            if n < SINGULAR_EPS {
                DistanceSample {
                    value,
                    grad: Vec2::ZERO,
                    singular: true,
                }
            } else {
                DistanceSample {
                    value,
                    grad: d / n,
                    singular: false,
                }
            }
        }
        (
            Shape::Rect {
                half_width,
                half_height,
            },
            _,
        ) => {
            // Distance to a convex set is convex, so the supremum over a
            // rectangle is attained at one of its corners.
            let mut best: Option<DistanceSample> = None;
            for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                let corner = ca + Vec2::new(sx * half_width, sy * half_height);
                let s = b.distance_sample(corner - cb);
                if best.is_none_or(|bst| s.value > bst.value) {
                    best = Some(s);
                }
            }
            clamp(best.expect("four corners"))
        }
        (Shape::Disk { radius: ra }, Shape::Rect { .. }) => {
            // Convex objective over the circle boundary: coarse scan then
            // golden-section refinement of the best bracket.
            let f = |th: f64| b.distance_sample(ca + Vec2::from_polar(ra, th) - cb);
            const N: usize = 256;
            let step = std::f64::consts::TAU / N as f64;
            let (mut best_i, mut best_v) = (0usize, f64::NEG_INFINITY);
            for i in 0..N {
                let v = f(i as f64 * step).value;
                if v > best_v {
                    best_v = v;
                    best_i = i;
                }
            }
            let (mut lo, mut hi) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let (mut f1, mut f2) = (f(x1).value, f(x2).value);
            for _ in 0..80 {
                if f1 > f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = f(x1).value;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = f(x2).value;
                }
            }
            clamp(f(0.5 * (lo + hi)))
        }
    }
}
