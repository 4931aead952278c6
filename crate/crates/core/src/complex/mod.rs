//! Discretized compact manifolds as cochain complexes with diagonal Hodge
//! stars (lowest-order discrete exterior calculus).

mod cochain;
mod mesh;

pub use cochain::{
    betti, betti_with, build_complex, count_below_gap, gap_threshold, kernel_dimension,
    mass_normalized_laplacian, CochainComplex,
};
pub use mesh::{
    build_circle, build_flat_torus, icosphere_like, load_mesh, octahedron, parse_off, to_off, Mesh,
    Model, Point, ZERO_WEIGHT_FLOOR,
};
