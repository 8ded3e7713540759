//! Finite-element spaces, quadrature and operator assembly.

pub mod assembly;
pub mod element;
pub mod quadrature;
pub mod spaces;

pub use assembly::{
    apply_dirichlet, assemble_contact_coupling, assemble_divergence, assemble_jacobian_a, assemble_load,
    assemble_load_split, assemble_residual_a, gamma_n, gamma_n_all, lower_boundary_ux_integral, roof_edge,
    top_constraints, DiscreteOperators, RoofEdge,
};
pub use spaces::FunctionSpaces;
