//! Graph-based semi-supervised fraud classification.
//!
//! A sparse symmetric k-NN similarity graph is built over transactions with
//! a Gaussian kernel; labels (+1 fraud, -1 normal, 0 unlabeled) are diffused
//! by a fixed-point iteration whose stationary point balances a p-Laplacian
//! smoothness term against a label-fitting term. The discrete operator
//! calculus (gradient, divergence, Laplacian, curvature, p-Laplacian) is
//! exposed directly so its algebraic identities can be checked.

mod experiment;
mod graph;
mod operators;
mod solver;

pub use experiment::{run_ch6_experiment, Ch6Config, Ch6Row};
pub use graph::{build_knn_graph, SimilarityGraph};
pub use operators::{
    curvature, degree, divergence, edge_inner, gradient, laplacian, local_variation, p_laplacian,
    smoothness_s1, smoothness_s2, smoothness_sp, vertex_inner, EdgeFunction,
};
pub use solver::{solve_ssl, LabelVector, SolveOutcome, SolverConfig};
