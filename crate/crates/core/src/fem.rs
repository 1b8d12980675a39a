//! P1 finite element assembly of the affine operator decomposition
//!
//!   a(w, v; y, μ) = a⁰(w, v) + Σ_k y_k a_y^k(w, v) + Σ_p μ_p a_μ^p(w, v)
//!
//! with a⁰ = ∫∇w·∇v − κ₀∫wv, a_y^k = σ√λ_k ∫κ_k w v, a_μ^p = ∫∂_p w v, and
//! homogeneous Dirichlet conditions imposed by dropping boundary nodes.
//! Matrix entries follow A_ij = a(φ_j, φ_i): rows are test functions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kl::KlExpansion;
use crate::linalg::{CsrMatrix, SparsityPattern};
use crate::mesh::Triangulation;

#[derive(Debug, Clone)]
pub struct AffineOperatorSet {
    pub a0: CsrMatrix,
    pub ay: Vec<CsrMatrix>,
    pub amu: Vec<CsrMatrix>,
    pub f_vec: Vec<f64>,
    pub l_vec: Vec<f64>,
    pub stiffness: CsrMatrix,
    pub gram_x: CsrMatrix,
    pub mass_l2: CsrMatrix,
    pub m_fe: usize,
}

impl AffineOperatorSet {
    pub fn k(&self) -> usize {
        self.ay.len()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        self.a0.pattern()
    }

    fn check_lengths(&self, y: &[f64], mu: &[f64]) -> Result<()> {
        if y.len() != self.k() {
            return Err(Error::Dimension {
                context: "random parameter vector",
                expected: self.k(),
                actual: y.len(),
            });
        }
        if mu.len() != self.amu.len() {
            return Err(Error::Dimension {
                context: "deterministic parameter vector",
                expected: self.amu.len(),
                actual: mu.len(),
            });
        }
        Ok(())
    }

    /// A(y, μ) = A0 + Σ y_k Ay[k] + Σ μ_p Amu[p].
    pub fn operator(&self, y: &[f64], mu: &[f64]) -> Result<CsrMatrix> {
        self.check_lengths(y, mu)?;
        let mut a = self.a0.clone();
        for (yk, m) in y.iter().zip(&self.ay) {
            a.axpy(*yk, m)?;
        }
        for (mp, m) in mu.iter().zip(&self.amu) {
            a.axpy(*mp, m)?;
        }
        Ok(a)
    }

    /// Symmetric part of A(y, μ); the convection terms are skew and drop out.
    pub fn symmetric_operator(&self, y: &[f64]) -> Result<CsrMatrix> {
        let zeros = vec![0.0; self.amu.len()];
        self.operator(y, &zeros)
    }
}

const MIDPOINT_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

struct ElementGeometry {
    area: f64,
    grads: [[f64; 2]; 3],
    midpoints: [[f64; 2]; 3],
}

fn element_geometry(mesh: &Triangulation, t: usize) -> ElementGeometry {
    let p = mesh.vertices(t);
    let area = mesh.area(t);
    let inv = 1.0 / (2.0 * area);
    let mut grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        grads[a] = [(p[b][1] - p[c][1]) * inv, (p[c][0] - p[b][0]) * inv];
    }
    let mut midpoints = [[0.0; 2]; 3];
    for (q, &(a, b)) in MIDPOINT_EDGES.iter().enumerate() {
        midpoints[q] = [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])];
    }
    ElementGeometry { area, grads, midpoints }
}

/// ∫_T w φ_a φ_b by the edge-midpoint rule (exact for quadratics).
fn weighted_mass_local(g: &ElementGeometry, weights: [f64; 3]) -> [[f64; 3]; 3] {
    let mut local = [[0.0; 3]; 3];
    for (q, &(e0, e1)) in MIDPOINT_EDGES.iter().enumerate() {
        // Hat functions are ½ at the midpoints of their adjacent edges.
        let mut phi = [0.0; 3];
        phi[e0] = 0.5;
        phi[e1] = 0.5;
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] += g.area / 3.0 * weights[q] * phi[a] * phi[b];
            }
        }
    }
    local
}

fn interior_pattern(mesh: &Triangulation) -> Arc<SparsityPattern> {
    let mut entries = Vec::with_capacity(9 * mesh.triangles.len());
    for tri in &mesh.triangles {
        for &a in tri {
            for &b in tri {
                if let (Some(i), Some(j)) = (mesh.dof(a), mesh.dof(b)) {
                    entries.push((i, j));
                }
            }
        }
    }
    let m = mesh.n_dofs();
    Arc::new(SparsityPattern::from_entries(m, m, &entries))
}

fn scatter(mesh: &Triangulation, t: usize, local: &[[f64; 3]; 3], target: &mut CsrMatrix) {
    let tri = mesh.triangles[t];
    for a in 0..3 {
        let Some(i) = mesh.dof(tri[a]) else { continue };
        for b in 0..3 {
            if let Some(j) = mesh.dof(tri[b]) {
                target.add_to(i, j, local[a][b]);
            }
        }
    }
}

/// Assembles every affine term together with f, l and the Gram matrices.
pub fn assemble_operators(
    mesh: &Triangulation,
    kl: &KlExpansion,
    kappa0: f64,
    sigma: f64,
) -> Result<AffineOperatorSet> {
    let pattern = interior_pattern(mesh);
    let m = mesh.n_dofs();
    let k = kl.len();
    let mut stiffness = CsrMatrix::zeros(pattern.clone());
    let mut mass = CsrMatrix::zeros(pattern.clone());
    let mut ay: Vec<CsrMatrix> = (0..k).map(|_| CsrMatrix::zeros(pattern.clone())).collect();
    let mut amu: Vec<CsrMatrix> = (0..2).map(|_| CsrMatrix::zeros(pattern.clone())).collect();
    let mut f_vec = vec![0.0; m];

    for t in 0..mesh.triangles.len() {
        let g = element_geometry(mesh, t);
        let mut ks = [[0.0; 3]; 3];
        let mut ms = [[0.0; 3]; 3];
        let mut conv = [[[0.0; 3]; 3]; 2];
        for a in 0..3 {
            for b in 0..3 {
                ks[a][b] = g.area * (g.grads[a][0] * g.grads[b][0] + g.grads[a][1] * g.grads[b][1]);
                ms[a][b] = g.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                for p in 0..2 {
                    // ∫_T ∂_p φ_b φ_a, trial b, test a.
                    conv[p][a][b] = g.grads[b][p] * g.area / 3.0;
                }
            }
        }
        scatter(mesh, t, &ks, &mut stiffness);
        scatter(mesh, t, &ms, &mut mass);
        for p in 0..2 {
            scatter(mesh, t, &conv[p], &mut amu[p]);
        }
        for (q, target) in ay.iter_mut().enumerate() {
            let scale = sigma * kl.lambda(q).sqrt();
            let w = [
                scale * kl.eval_mode(q, g.midpoints[0]),
                scale * kl.eval_mode(q, g.midpoints[1]),
                scale * kl.eval_mode(q, g.midpoints[2]),
            ];
            scatter(mesh, t, &weighted_mass_local(&g, w), target);
        }
        for &node in &mesh.triangles[t] {
            if let Some(i) = mesh.dof(node) {
                f_vec[i] += g.area / 3.0;
            }
        }
    }

    let a0 = CsrMatrix::linear_combination(&[(1.0, &stiffness), (-kappa0, &mass)])?;
    let gram_x = CsrMatrix::linear_combination(&[(1.0, &stiffness), (1.0, &mass)])?;
    Ok(AffineOperatorSet {
        a0,
        ay,
        amu,
        f_vec,
        l_vec: assemble_output_functional(mesh),
        stiffness,
        gram_x,
        mass_l2: mass,
        m_fe: m,
    })
}

/// l_i = ∫_{(0,½)²} φ_i, exact because the subdomain is a union of triangles.
pub fn assemble_output_functional(mesh: &Triangulation) -> Vec<f64> {
    let mut l = vec![0.0; mesh.n_dofs()];
    for t in 0..mesh.triangles.len() {
        let c = mesh.centroid(t);
        if c[0] > 0.0 && c[0] < 0.5 && c[1] > 0.0 && c[1] < 0.5 {
            let area = mesh.area(t);
            for &node in &mesh.triangles[t] {
                if let Some(i) = mesh.dof(node) {
                    l[i] += area / 3.0;
                }
            }
        }
    }
    l
}

/// Assembles A(y, μ) in one pass from the pointwise reaction coefficient
/// −κ₀ + σ Σ √λ_k κ_k(x) y_k, without going through the affine terms.
pub fn assemble_operator_direct(
    mesh: &Triangulation,
    kl: &KlExpansion,
    kappa0: f64,
    sigma: f64,
    y: &[f64],
    mu: &[f64; 2],
) -> CsrMatrix {
    let pattern = interior_pattern(mesh);
    let mut a = CsrMatrix::zeros(pattern);
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    for t in 0..mesh.triangles.len() {
        let g = element_geometry(mesh, t);
        // −κ(x; −y) = −κ₀ + σ Σ √λ_k κ_k(x) y_k
        let w = g.midpoints.map(|x| -kl.eval_field(kappa0, sigma, x, &neg_y));
        let mut local = weighted_mass_local(&g, w);
        for (a_, row) in local.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v += g.area * (g.grads[a_][0] * g.grads[b][0] + g.grads[a_][1] * g.grads[b][1]);
                *v += (mu[0] * g.grads[b][0] + mu[1] * g.grads[b][1]) * g.area / 3.0;
            }
        }
        scatter(mesh, t, &local, &mut a);
    }
    a
}
