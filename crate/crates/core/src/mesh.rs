//! Uniform triangulation of Ω = (−½, ½)².

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Triangulation {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_node_flags: Vec<bool>,
    pub n_cells_per_side: usize,
    dof_of_node: Vec<Option<usize>>,
}

impl Triangulation {
    /// Number of interior nodes, i.e. finite element unknowns.
    pub fn n_dofs(&self) -> usize {
        let k = self.n_cells_per_side - 1;
        k * k
    }

    /// Unknown index of a node, `None` on the boundary.
    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [p, q, r] = self.vertices(t);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    /// Centroid of triangle `t`.
    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p, q, r] = self.vertices(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Coordinates of the interior nodes in unknown order.
    pub fn dof_coordinates(&self) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.n_dofs()];
        for (node, dof) in self.dof_of_node.iter().enumerate() {
            if let Some(d) = dof {
                out[*d] = self.nodes[node];
            }
        }
        out
    }
}

/// Splits each of the n × n square cells along its (i,j)–(i+1,j+1) diagonal.
/// Interior unknowns are numbered row by row, which keeps the matrix
/// bandwidth at n.
pub fn build_mesh(n_cells_per_side: usize) -> Result<Triangulation> {
    let n = n_cells_per_side;
    if n < 2 || n % 2 != 0 {
        return Err(Error::config(format!(
            "cells per side must be even and at least 2 (so that x1 = 0 and x2 = 0 are mesh lines), got {n}"
        )));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    let mut dof_of_node = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([-0.5 + i as f64 * h, -0.5 + j as f64 * h]);
            let on_boundary = i == 0 || j == 0 || i == n || j == n;
            boundary.push(on_boundary);
            dof_of_node.push(if on_boundary {
                None
            } else {
                Some((j - 1) * (n - 1) + (i - 1))
            });
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Ok(Triangulation {
        nodes,
        triangles,
        boundary_node_flags: boundary,
        n_cells_per_side: n,
        dof_of_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn dof_counts() {
        assert_eq!(build_mesh(16).unwrap().n_dofs(), 225);
        assert_eq!(build_mesh(32).unwrap().n_dofs(), 961);
        let m = build_mesh(2).unwrap();
        assert_eq!((m.n_dofs(), m.triangles.len()), (1, 8));
    }

    #[test]
    fn odd_or_tiny_meshes_rejected() {
        for n in [0, 1, 3, 7] {
            let err = build_mesh(n).unwrap_err();
            assert!(err.is_config() && err.to_string().contains("even"));
        }
    }

    #[test]
    fn areas_positive_and_sum_to_one() {
        let m = build_mesh(8).unwrap();
        let total: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
        assert!((0..m.triangles.len()).all(|t| m.area(t) > 0.0));
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conforming_edges() {
        let m = build_mesh(6).unwrap();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &m.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), c) in count {
            let on_boundary_edge = m.boundary_node_flags[a] && m.boundary_node_flags[b] && {
                let (p, q) = (m.nodes[a], m.nodes[b]);
                (p[0] == q[0] && p[0].abs() == 0.5) || (p[1] == q[1] && p[1].abs() == 0.5)
            };
            assert_eq!(c, if on_boundary_edge { 1 } else { 2 });
        }
    }
}
