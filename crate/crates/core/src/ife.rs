//! Piecewise-linear immersed finite element basis on interface triangles and
//! the standard linear basis elsewhere.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use crate::error::{IfePicError, Result};
use crate::geometry::{dot, InterfaceCut, Point, Side, TriangleKind, TriangulatedMesh};

/// Condition estimate above which a cut is treated as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// `a x + b y + c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearPiece {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearPiece {
    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        self.a * p[0] + self.b * p[1] + self.c
    }

    #[inline]
    pub fn grad(&self) -> Point {
        [self.a, self.b]
    }
}

/// Local IFE basis on one interface triangle: two linear pieces per vertex
/// function.
#[derive(Debug, Clone, PartialEq)]
pub struct IfeLocalBasis {
    pub triangle: usize,
    pub plus: [LinearPiece; 3],
    pub minus: [LinearPiece; 3],
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl IfeLocalBasis {
    pub fn pieces(&self, side: Side) -> &[LinearPiece; 3] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn eval(&self, i: usize, p: Point, side: Side) -> f64 {
        self.pieces(side)[i].eval(p)
    }

    pub fn grad(&self, i: usize, side: Side) -> Point {
        self.pieces(side)[i].grad()
    }

    /// The six defining constraints of function `i`, substituted directly:
    /// nodal values at the three vertices, value continuity at `D` and `E`,
    /// and flux continuity across `DE`.
    pub fn constraint_residuals(&self, cut: &InterfaceCut, i: usize) -> [f64; 6] {
        let mut r = [0.0; 6];
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            r[j] = self.eval(i, cut.vertices[j], cut.vertex_sides[j]) - want;
        }
        r[3] = self.eval(i, cut.d, Side::Plus) - self.eval(i, cut.d, Side::Minus);
        r[4] = self.eval(i, cut.e, Side::Plus) - self.eval(i, cut.e, Side::Minus);
        r[5] = self.beta_plus * dot(self.grad(i, Side::Plus), cut.normal)
            - self.beta_minus * dot(self.grad(i, Side::Minus), cut.normal);
        r
    }
}

/// Barycentric shape functions of a triangle.
pub fn standard_basis(v: &[Point; 3]) -> [LinearPiece; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    std::array::from_fn(|i| {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        let a = (v[j][1] - v[k][1]) / det;
        let b = (v[k][0] - v[j][0]) / det;
        let c = (v[j][0] * v[k][1] - v[k][0] * v[j][1]) / det;
        LinearPiece { a, b, c }
    })
}

/// Solves the nodal / value-continuity / flux-continuity constraints for the
/// three IFE functions of an interface triangle.
///
/// Unknowns per function are `(a+, b+, c+, a-, b-, c-)`, expressed in local
/// coordinates scaled by the triangle diameter and mapped back afterwards.
pub fn build_local_basis(cut: &InterfaceCut, beta_minus: f64, beta_plus: f64) -> Result<IfeLocalBasis> {
    if !(beta_minus > 0.0 && beta_plus > 0.0) {
        return Err(IfePicError::InvalidConfig(format!(
            "coefficients must be positive, got beta- = {beta_minus}, beta+ = {beta_plus}"
        )));
    }
    let origin = cut.vertices[0];
    let scale = (0..3)
        .map(|k| {
            let p = cut.vertices[k];
            let q = cut.vertices[(k + 1) % 3];
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    let local = |p: Point| [(p[0] - origin[0]) / scale, (p[1] - origin[1]) / scale];

    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for (j, &vertex) in cut.vertices.iter().enumerate() {
        let [x, y] = local(vertex);
        let off = match cut.vertex_sides[j] {
            Side::Plus => 0,
            Side::Minus => 3,
        };
        m[(j, off)] = x;
        m[(j, off + 1)] = y;
        m[(j, off + 2)] = 1.0;
    }
    for (row, &p) in [(3, &cut.d), (4, &cut.e)] {
        let [x, y] = local(p);
        m[(row, 0)] = x;
        m[(row, 1)] = y;
        m[(row, 2)] = 1.0;
        m[(row, 3)] = -x;
        m[(row, 4)] = -y;
        m[(row, 5)] = -1.0;
    }
    // Flux row normalised by max(beta) to keep the system well scaled.
    let bmax = beta_plus.max(beta_minus);
    let [nx, ny] = cut.normal;
    m[(5, 0)] = beta_plus / bmax * nx;
    m[(5, 1)] = beta_plus / bmax * ny;
    m[(5, 3)] = -beta_minus / bmax * nx;
    m[(5, 4)] = -beta_minus / bmax * ny;

    let lu = m.lu();
    let inverse = lu.try_inverse().ok_or(IfePicError::DegenerateCut {
        triangle: cut.triangle,
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&m) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(IfePicError::DegenerateCut { triangle: cut.triangle, condition });
    }

    let mut plus = [LinearPiece::default(); 3];
    let mut minus = [LinearPiece::default(); 3];
    for i in 0..3 {
        let mut rhs = SVector::<f64, 6>::zeros();
        rhs[i] = 1.0;
        let s = lu.solve(&rhs).ok_or(IfePicError::DegenerateCut {
            triangle: cut.triangle,
            condition,
        })?;
        plus[i] = to_global(s[0], s[1], s[2], origin, scale);
        minus[i] = to_global(s[3], s[4], s[5], origin, scale);
    }
    Ok(IfeLocalBasis { triangle: cut.triangle, plus, minus, beta_minus, beta_plus })
}

fn to_global(a: f64, b: f64, c: f64, origin: Point, scale: f64) -> LinearPiece {
    let a = a / scale;
    let b = b / scale;
    LinearPiece { a, b, c: c - a * origin[0] - b * origin[1] }
}

fn one_norm(m: &SMatrix<f64, 6, 6>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Basis on one triangle of the mesh, after any degenerate-cut
/// reclassification.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalBasis {
    Standard { pieces: [LinearPiece; 3], side: Side },
    Immersed { basis: IfeLocalBasis, cut: usize },
}

/// Precomputed basis for every triangle of a mesh for one coefficient pair.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub local: Vec<LocalBasis>,
    /// Interface triangles whose constraint system was too ill-conditioned
    /// and which fell back to the standard basis of their majority side.
    pub reclassified: Vec<usize>,
}

impl BasisTable {
    pub fn build(mesh: &TriangulatedMesh, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        if !(beta_minus > 0.0 && beta_plus > 0.0) {
            return Err(IfePicError::InvalidConfig(format!(
                "coefficients must be positive, got beta- = {beta_minus}, beta+ = {beta_plus}"
            )));
        }
        let entries: Vec<(LocalBasis, bool)> = (0..mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let verts = mesh.triangle_vertices(t);
                match mesh.kinds[t] {
                    TriangleKind::Interface => {
                        let k = mesh.cut_of[t].expect("interface triangle has a cut");
                        let cut = &mesh.cuts[k];
                        match build_local_basis(cut, beta_minus, beta_plus) {
                            Ok(basis) => (LocalBasis::Immersed { basis, cut: k }, false),
                            Err(_) => {
                                let side = if cut.plus_area >= cut.minus_area { Side::Plus } else { Side::Minus };
                                (LocalBasis::Standard { pieces: standard_basis(&verts), side }, true)
                            }
                        }
                    }
                    kind => (
                        LocalBasis::Standard {
                            pieces: standard_basis(&verts),
                            side: kind.uniform_side().unwrap(),
                        },
                        false,
                    ),
                }
            })
            .collect();
        let reclassified = entries
            .iter()
            .enumerate()
            .filter_map(|(t, (_, r))| r.then_some(t))
            .collect();
        Ok(Self {
            beta_minus,
            beta_plus,
            local: entries.into_iter().map(|(b, _)| b).collect(),
            reclassified,
        })
    }

    pub fn beta(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.beta_minus,
            Side::Plus => self.beta_plus,
        }
    }

    /// Linear pieces of triangle `t` valid on `side`.
    pub fn pieces(&self, t: usize, side: Side) -> &[LinearPiece; 3] {
        match &self.local[t] {
            LocalBasis::Standard { pieces, .. } => pieces,
            LocalBasis::Immersed { basis, .. } => basis.pieces(side),
        }
    }

    /// Side a piece belongs to, collapsing to the single side of a standard
    /// triangle.
    pub fn effective_side(&self, t: usize, side: Side) -> Side {
        match &self.local[t] {
            LocalBasis::Standard { side: s, .. } => *s,
            LocalBasis::Immersed { .. } => side,
        }
    }

    /// Sub-regions of triangle `t` as (convex polygon, side).
    pub fn regions<'a>(&self, mesh: &'a TriangulatedMesh, t: usize) -> Vec<(Vec<Point>, Side)> {
        match &self.local[t] {
            LocalBasis::Standard { side, .. } => vec![(mesh.triangle_vertices(t).to_vec(), *side)],
            LocalBasis::Immersed { cut, .. } => {
                let c = &mesh.cuts[*cut];
                vec![(c.plus_polygon.clone(), Side::Plus), (c.minus_polygon.clone(), Side::Minus)]
            }
        }
    }

    /// Side of the piece that contains `p` according to the straight-segment
    /// approximation of the interface inside triangle `t`.
    pub fn piece_side_at(&self, mesh: &TriangulatedMesh, t: usize, p: Point) -> Side {
        match &self.local[t] {
            LocalBasis::Standard { side, .. } => *side,
            LocalBasis::Immersed { cut, .. } => mesh.cuts[*cut].side_of(p),
        }
    }
}
