//! Projective differential geometry of affine connections on a coordinate chart.

pub mod algebra;
pub mod chart;
pub mod connection;
pub mod develop;
pub mod error;
pub mod expr;
pub mod jet;
pub mod projective;
pub mod reps;
pub mod samples;
pub mod tensor;
pub mod twistor;

pub use connection::{ConnectionSpec, ConnectionValue};
pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use jet::Jet3;
pub use tensor::{Slot, TensorValue};

/// Order-preserving map over independent work items, parallel when enabled.
#[cfg(feature = "parallel")]
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}
