pub mod dense;
pub mod diffops;
pub mod error;
pub mod krylov;
pub mod linop;
pub mod projector;
pub mod vector;
pub mod fbp;
pub mod simlab;
pub mod cli;
pub mod io;
