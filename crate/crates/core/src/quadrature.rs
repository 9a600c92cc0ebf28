//! Quadrature rules on segments and triangles.

use crate::geometry::Point;

/// Two-point Gauss-Legendre nodes on [0, 1] with weights summing to 1.
pub const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Six-point symmetric rule exact for polynomials of degree 4, as
/// (barycentric coordinates, weight) with weights summing to 1.
const DEGREE4: [([f64; 3], f64); 6] = [
    ([0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070], 0.223_381_589_678_011),
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
];

/// A triangle rule in barycentric form; weights sum to 1 and are scaled by
/// the triangle area at integration time.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    pub fn degree4() -> Self {
        Self { points: DEGREE4.to_vec() }
    }

    /// Collapsed (Duffy) product of `n`-point Gauss-Legendre rules; exact to
    /// degree `2n - 2` at least.
    pub fn collapsed_gauss(n: usize) -> Self {
        let g = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                let l1 = u;
                let l2 = v * (1.0 - u);
                points.push(([1.0 - l1 - l2, l1, l2], 2.0 * wu * wv * (1.0 - u)));
            }
        }
        Self { points }
    }

    /// Integral of `f` over the triangle `tri`.
    pub fn integrate(&self, tri: &[Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
        let area = triangle_area(tri).abs();
        let mut s = 0.0;
        for &(l, w) in &self.points {
            let p = [
                l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
                l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
            ];
            s += w * f(p);
        }
        s * area
    }
}

pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
}

/// Gauss-Legendre nodes and weights mapped to [0, 1] (weights sum to 1).
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // Newton iteration from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}
