//! Exact symbolic calculus on supermanifolds in a single chart.

pub mod berezin;
pub mod cartan;
pub mod chart;
pub mod error;
pub mod expr;
pub mod matrix;
pub mod nijenhuis;
pub mod poly;
pub mod quantize;
pub mod random;
pub mod scalar;
pub mod symplectic;

pub use berezin::{berezin_integral, berezinian, hodge_star, Metric};
pub use cartan::{de_rham, degree_of, euler, lift_inner, lift_lie, VField};
pub use chart::{Chart, ChartBuilder, ChartKind, Parity, Role, Symbol};
pub use error::{Error, Result};
pub use expr::Expr;
pub use matrix::Matrix;
pub use nijenhuis::{fn_bracket, tensor_field, tensor_potential, Tensor1k};
pub use poly::{FuncInst, Mono, Poly, Var};
pub use quantize::{
    clifford_rep, fermionic_weyl, ladder_ops, moyal_matrix, moyal_star, odd_star, pauli_chart,
    pauli_model, pauli_report, quantum_params, quantum_susy_check, schouten_bracket, star_bracket,
    susy_chart, susy_model, witten_hamiltonian, Bracket, Branch, StarAlgebra,
};
pub use random::Sampler;
pub use scalar::Scalar;
pub use symplectic::{
    cartan_symmetry, evolve, hamilton_residual, hamiltonian_vf, poisson, r11_compose,
    verify_symplectic, CartanVerdict, FlowSeries, HamiltonResidual, SympReport, SympStructure,
};
