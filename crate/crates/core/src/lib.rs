//! Graph signal processing primitives, single-layer graph neural networks,
//! and tools for checking which signal pairs a filter bank or a GNN can tell
//! apart.
//!
//! The usual pipeline is: build a [`GeometricGraph`], take its [`laplacian`],
//! normalize it with [`normalize_support`], diagonalize with [`eig_sym`], and
//! split the spectrum with [`split_subspace`]. Filters, GNNs and the
//! discriminability checks all operate on the result.

pub mod discrim;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod spectral;
pub mod suites;
pub mod training;

pub use error::{Error, Result};
pub use filter::{
    apply_fir, apply_spectral, bank_il_constant, cutoff_frequency, freq_response, il_constant,
    zero_high_response, FilterBank, FirFilter, SpectralFilter,
};
pub use gnn::{
    bank_forward, gnn_forward, readout_apply, Bank, GraphOperator, Nonlinearity, Readout,
    SingleLayerGnn,
};
pub use graph::{
    generate_geometric_graph, graph_shift, laplacian, normalize_support, GeometricGraph,
    SupportMatrix,
};
pub use linalg::Matrix;
pub use spectral::{eig_sym, gft, igft, project_subspace, split_subspace, Band, Spectrum, SubspaceSplit};
