//! Rado numbers, degrees of regularity and parametric Rado bounds, computed
//! through propositional encodings of "no monochromatic solution".

pub mod equation;

pub use equation::{parse_equation, LinearEquation, SolutionTuple};
pub mod coloring;
pub mod encoder;
pub mod solver;
pub mod search;
pub mod dor;
pub mod tables;
pub mod symbolic;
