pub mod algebra;
pub mod cli;
pub mod games;
pub mod graph;
pub mod indepset;
pub mod io;
pub mod lifting;
pub mod luck;
pub mod par;
pub mod rational;
pub mod sampling;
pub mod stability;
