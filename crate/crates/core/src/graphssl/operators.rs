//! Discrete operator calculus on weighted graphs.
//!
//! Vertex functions are plain `&[f64]`; edge functions store one value per
//! directed edge. Inner products sum over vertices and over ordered edge
//! pairs respectively, which makes the divergence the exact adjoint of the
//! gradient: `<df, F>_E == <f, -div F>_V`.

use crate::error::{Error, Result};

use super::graph::SimilarityGraph;

/// A function on directed edges; `values[i][e]` is the value on the edge
/// from `i` to its `e`-th neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    pub(crate) values: Vec<Vec<f64>>,
}

impl EdgeFunction {
    /// Zero edge function shaped like the graph's adjacency.
    pub fn zeros(g: &SimilarityGraph) -> Self {
        Self {
            values: (0..g.n_nodes())
                .map(|i| vec![0.0; g.neighbors(i).len()])
                .collect(),
        }
    }

    /// Value on the directed edge `(i, j)`; `None` when the edge is absent.
    pub fn get(&self, g: &SimilarityGraph, i: usize, j: usize) -> Option<f64> {
        g.neighbors(i)
            .iter()
            .position(|e| e.to == j)
            .map(|pos| self.values[i][pos])
    }

    /// Sets the value on the directed edge `(i, j)`.
    pub fn set(&mut self, g: &SimilarityGraph, i: usize, j: usize, value: f64) -> Result<()> {
        let pos = g
            .neighbors(i)
            .iter()
            .position(|e| e.to == j)
            .ok_or_else(|| Error::InvalidParam(format!("no edge ({i}, {j})")))?;
        self.values[i][pos] = value;
        Ok(())
    }
}

fn check_len(g: &SimilarityGraph, f: &[f64]) -> Result<()> {
    if f.len() != g.n_nodes() {
        return Err(Error::LengthMismatch {
            what: "graph nodes vs function values",
            left: g.n_nodes(),
            right: f.len(),
        });
    }
    Ok(())
}

/// Degree `d_i = sum_{j ~ i} w_ij`.
pub fn degree(g: &SimilarityGraph) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|i| g.neighbors(i).iter().map(|e| e.weight).sum())
        .collect()
}

/// Gradient `(df)_ij = sqrt(w_ij) (f_j - f_i)`, antisymmetric in (i, j).
pub fn gradient(g: &SimilarityGraph, f: &[f64]) -> Result<EdgeFunction> {
    check_len(g, f)?;
    Ok(EdgeFunction {
        values: (0..g.n_nodes())
            .map(|i| {
                g.neighbors(i)
                    .iter()
                    .map(|e| e.weight.sqrt() * (f[e.to] - f[i]))
                    .collect()
            })
            .collect(),
    })
}

/// Divergence `(div F)_j = sum_{i ~ j} sqrt(w_ij) (F_ji - F_ij)`, the
/// negative adjoint of the gradient.
pub fn divergence(g: &SimilarityGraph, f_edge: &EdgeFunction) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|j| {
            g.neighbors(j)
                .iter()
                .enumerate()
                .map(|(pos, e)| {
                    let f_ji = f_edge.values[j][pos];
                    let f_ij = f_edge.values[e.to][e.rev];
                    e.weight.sqrt() * (f_ji - f_ij)
                })
                .sum()
        })
        .collect()
}

/// Graph Laplacian `(Lf)_j = d_j f_j - sum_{i ~ j} w_ij f_i`, equal to
/// `-1/2 div(df)`.
pub fn laplacian(g: &SimilarityGraph, f: &[f64]) -> Result<Vec<f64>> {
    check_len(g, f)?;
    Ok((0..g.n_nodes())
        .map(|j| {
            let mut acc = 0.0;
            let mut deg = 0.0;
            for e in g.neighbors(j) {
                deg += e.weight;
                acc += e.weight * f[e.to];
            }
            deg * f[j] - acc
        })
        .collect())
}

/// Smoothed local variation `||d_i f|| = sqrt(sum_j (df)_ij^2 + eps)`,
/// strictly positive for `eps > 0`.
pub fn local_variation(g: &SimilarityGraph, f: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_len(g, f)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    Ok((0..g.n_nodes())
        .map(|i| {
            let sum_sq: f64 = g
                .neighbors(i)
                .iter()
                .map(|e| {
                    let d = f[e.to] - f[i];
                    e.weight * d * d
                })
                .sum();
            (sum_sq + epsilon).sqrt()
        })
        .collect())
}

fn half_weighted_combination(
    g: &SimilarityGraph,
    f: &[f64],
    coefficient: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|j| {
            0.5 * g
                .neighbors(j)
                .iter()
                .map(|e| e.weight * coefficient(e.to, j) * (f[j] - f[e.to]))
                .sum::<f64>()
        })
        .collect()
}

/// Curvature `(kf)_j = 1/2 sum_{i ~ j} w_ij (1/||d_i f|| + 1/||d_j f||)
/// (f_j - f_i)` with epsilon-smoothed local variations.
pub fn curvature(g: &SimilarityGraph, f: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let v = local_variation(g, f, epsilon)?;
    Ok(half_weighted_combination(g, f, |i, j| {
        1.0 / v[i] + 1.0 / v[j]
    }))
}

/// p-Laplacian `(L_p f)_j = 1/2 sum_{i ~ j} w_ij (||d_i f||^{p-2} +
/// ||d_j f||^{p-2}) (f_j - f_i)`. Reduces to the Laplacian at `p = 2` and
/// to the curvature at `p = 1`.
pub fn p_laplacian(g: &SimilarityGraph, f: &[f64], p: f64, epsilon: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParam(format!("p must be >= 1, got {p}")));
    }
    let v = local_variation(g, f, epsilon)?;
    Ok(half_weighted_combination(g, f, |i, j| {
        v[i].powf(p - 2.0) + v[j].powf(p - 2.0)
    }))
}

/// Vertex inner product `<f, g>_V = sum_i f_i g_i`.
pub fn vertex_inner(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Edge inner product over ordered pairs: `<F, G>_E = sum_{(i,j)} F_ij G_ij`.
pub fn edge_inner(f_edge: &EdgeFunction, g_edge: &EdgeFunction) -> f64 {
    f_edge
        .values
        .iter()
        .zip(&g_edge.values)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y))
        .sum()
}

/// Quadratic smoothness `S_2(f) = <Lf, f>`.
pub fn smoothness_s2(g: &SimilarityGraph, f: &[f64]) -> Result<f64> {
    Ok(vertex_inner(&laplacian(g, f)?, f))
}

/// Total-variation smoothness `S_1(f) = sum_i ||d_i f||`.
pub fn smoothness_s1(g: &SimilarityGraph, f: &[f64], epsilon: f64) -> Result<f64> {
    Ok(local_variation(g, f, epsilon)?.iter().sum())
}

/// General smoothness `S_p(f) = 1/p sum_i ||d_i f||^p`.
pub fn smoothness_sp(g: &SimilarityGraph, f: &[f64], p: f64, epsilon: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParam(format!("p must be >= 1, got {p}")));
    }
    Ok(local_variation(g, f, epsilon)?
        .iter()
        .map(|v| v.powf(p))
        .sum::<f64>()
        / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-10;

    pub(crate) fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.6) {
                    edges.push((i, j, rng.gen_range(0.1..1.0)));
                }
            }
        }
        SimilarityGraph::from_edges(n, &edges).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn degree_cases() {
        let single = SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(degree(&single), vec![1.0, 1.0]);

        let triangle =
            SimilarityGraph::from_edges(3, &[(0, 1, 2.0), (1, 2, 2.0), (0, 2, 2.0)]).unwrap();
        assert_eq!(degree(&triangle), vec![4.0, 4.0, 4.0]);

        let isolated = SimilarityGraph::from_edges(3, &[(0, 1, 1.5)]).unwrap();
        assert_eq!(degree(&isolated)[2], 0.0);
    }

    #[test]
    fn gradient_cases() {
        let g = SimilarityGraph::from_edges(2, &[(0, 1, 4.0)]).unwrap();
        let df = gradient(&g, &[0.0, 1.0]).unwrap();
        assert_eq!(df.get(&g, 0, 1), Some(2.0));
        assert_eq!(df.get(&g, 1, 0), Some(-2.0));

        let constant = gradient(&g, &[3.0, 3.0]).unwrap();
        assert_eq!(constant.get(&g, 0, 1), Some(0.0));

        let flipped = gradient(&g, &[0.0, -1.0]).unwrap();
        assert_eq!(flipped.get(&g, 0, 1), Some(-2.0));
    }

    #[test]
    fn gradient_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_graph(&mut rng, 7);
        let f = random_vec(&mut rng, 7);
        let df = gradient(&g, &f).unwrap();
        for i in 0..7 {
            for (pos, e) in g.neighbors(i).iter().enumerate() {
                assert!((df.values[i][pos] + df.values[e.to][e.rev]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn divergence_of_gradient_of_constant_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(&mut rng, 6);
        let df = gradient(&g, &[5.0; 6]).unwrap();
        assert!(divergence(&g, &df).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_of_symmetric_edge_function_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 6);
        let mut f_edge = EdgeFunction::zeros(&g);
        for i in 0..6 {
            for e in g.neighbors(i).iter().copied().collect::<Vec<_>>() {
                // symmetric: F_ij = F_ji, keyed by the unordered pair
                let (a, b) = if i < e.to { (i, e.to) } else { (e.to, i) };
                f_edge.set(&g, i, e.to, (a * 100 + b) as f64 * 0.001 + 0.5).unwrap();
            }
        }
        assert!(divergence(&g, &f_edge).iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn adjointness_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(2..10);
            let g = random_graph(&mut rng, n);
            let f = random_vec(&mut rng, n);
            let mut f_edge = EdgeFunction::zeros(&g);
            for i in 0..n {
                for pos in 0..g.neighbors(i).len() {
                    f_edge.values[i][pos] = rng.gen_range(-1.0..1.0);
                }
            }
            let df = gradient(&g, &f).unwrap();
            let lhs = edge_inner(&df, &f_edge);
            let div = divergence(&g, &f_edge);
            let neg_div: Vec<f64> = div.iter().map(|&v| -v).collect();
            let rhs = vertex_inner(&f, &neg_div);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn laplacian_direct_and_route_equivalence() {
        let g = SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(laplacian(&g, &[0.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(laplacian(&g, &[4.0, 4.0]).unwrap(), vec![0.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(2..9);
            let g = random_graph(&mut rng, n);
            let f = random_vec(&mut rng, n);
            let direct = laplacian(&g, &f).unwrap();
            let df = gradient(&g, &f).unwrap();
            let via_div: Vec<f64> = divergence(&g, &df).iter().map(|&v| -0.5 * v).collect();
            for (a, b) in direct.iter().zip(&via_div) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            // positive semi-definiteness
            assert!(vertex_inner(&direct, &f) >= -1e-12);
        }
    }

    #[test]
    fn local_variation_cases() {
        let g = SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let v = local_variation(&g, &[7.0, 7.0], EPS).unwrap();
        assert!((v[0] - EPS.sqrt()).abs() < 1e-18);

        let v = local_variation(&g, &[0.0, 1.0], EPS).unwrap();
        assert!((v[0] - (1.0 + EPS).sqrt()).abs() < 1e-15);

        // scaling f by c scales the squared variation minus eps by c^2
        let f = [0.2, -1.3];
        let c = 3.7;
        let scaled: Vec<f64> = f.iter().map(|&x| c * x).collect();
        let v1 = local_variation(&g, &f, EPS).unwrap();
        let v2 = local_variation(&g, &scaled, EPS).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            let lhs = b * b - EPS;
            let rhs = c * c * (a * a - EPS);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_of_constant_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_graph(&mut rng, 6);
        let k = curvature(&g, &[2.5; 6], EPS).unwrap();
        assert!(k.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn curvature_equals_p_laplacian_at_p_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_graph(&mut rng, 8);
        let f = random_vec(&mut rng, 8);
        let k = curvature(&g, &f, EPS).unwrap();
        let l1 = p_laplacian(&g, &f, 1.0, EPS).unwrap();
        for (a, b) in k.iter().zip(&l1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn p_laplacian_at_p_two_is_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let n = rng.gen_range(2..9);
            let g = random_graph(&mut rng, n);
            let f = random_vec(&mut rng, n);
            let l2 = p_laplacian(&g, &f, 2.0, EPS).unwrap();
            let l = laplacian(&g, &f).unwrap();
            for (a, b) in l2.iter().zip(&l) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn p_laplacian_rejects_p_below_one() {
        let g = SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert!(p_laplacian(&g, &[0.0, 1.0], 0.5, EPS).is_err());
    }

    fn finite_difference_gradient(
        f: &[f64],
        h: f64,
        functional: impl Fn(&[f64]) -> f64,
    ) -> Vec<f64> {
        (0..f.len())
            .map(|k| {
                let mut plus = f.to_vec();
                let mut minus = f.to_vec();
                plus[k] += h;
                minus[k] -= h;
                (functional(&plus) - functional(&minus)) / (2.0 * h)
            })
            .collect()
    }

    // The analytic gradients of the smoothness functionals, given the
    // half-scaled operator definitions above, are:
    //   grad S_2 = 2 Lf,  grad S_1 = 2 kf,  grad S_p = 2 L_p f.
    // These identities are what the fixed-point solver's stationarity
    // ultimately rests on, so they are pinned here by central differences.
    #[test]
    fn smoothness_gradients_match_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..10 {
            let n = rng.gen_range(3..9);
            let g = random_graph(&mut rng, n);
            let f = random_vec(&mut rng, n);

            let fd2 = finite_difference_gradient(&f, h, |x| smoothness_s2(&g, x).unwrap());
            let lap = laplacian(&g, &f).unwrap();
            for (d, l) in fd2.iter().zip(&lap) {
                assert!((d - 2.0 * l).abs() < 1e-5, "S2 gradient vs 2*laplacian");
            }

            let fd1 =
                finite_difference_gradient(&f, h, |x| smoothness_s1(&g, x, EPS).unwrap());
            let k = curvature(&g, &f, EPS).unwrap();
            for (d, c) in fd1.iter().zip(&k) {
                assert!((d - 2.0 * c).abs() < 1e-5, "S1 gradient vs 2*curvature");
            }

            for p in [1.5, 3.0] {
                let fdp = finite_difference_gradient(&f, h, |x| {
                    smoothness_sp(&g, x, p, EPS).unwrap()
                });
                let lp = p_laplacian(&g, &f, p, EPS).unwrap();
                for (d, l) in fdp.iter().zip(&lp) {
                    assert!((d - 2.0 * l).abs() < 1e-5, "Sp gradient vs 2*p_laplacian");
                }
            }
        }
    }

    #[test]
    fn curvature_finite_difference_on_six_node_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 6);
            let f = random_vec(&mut rng, 6);
            let fd = finite_difference_gradient(&f, 1e-6, |x| {
                smoothness_s1(&g, x, EPS).unwrap()
            });
            let k = curvature(&g, &f, EPS).unwrap();
            for (d, c) in fd.iter().zip(&k) {
                assert!((d - 2.0 * c).abs() < 1e-5);
            }
        }
    }
}
