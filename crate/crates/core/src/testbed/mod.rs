//! Problem suppliers: synthetic quadratic generators, Matrix Market input and
//! the unconstrained test-function collection.

mod functions;
mod generators;
mod matrix_market;

pub use functions::{fd_gradient_error, nonlinear_collection, StartPoint, TestFunction, TestProblem, DEFAULT_DIMENSION};
pub use generators::{
    generate_qp, quadratic_from_operator, random_spd_dense, GeneratorError, QpGeneratorKind, QpGeneratorSpec,
    QP_START_SCALE,
};
pub use matrix_market::{
    load_matrix_market, parse_matrix_market, write_matrix_market, MatrixMarketError, MatrixMarketHeader,
};
