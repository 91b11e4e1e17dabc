pub mod basis;
pub mod cli;
pub mod em;
pub mod error;
pub mod estep;
pub mod graph;
pub mod graphon;
pub mod io;
pub mod microdiff;
pub mod mstep;
pub mod positions;
pub mod qp;
pub mod replicate;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod testing;
