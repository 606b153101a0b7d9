pub mod body;
pub mod constants;
pub mod constructions;
pub mod distances;
pub mod error;
pub mod families;
pub mod harness;
pub mod hull;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod measure;
pub mod minnorm;
pub mod optim;
pub mod positions;
pub mod lp;
pub mod sampling;

pub use error::{Error, Result};
