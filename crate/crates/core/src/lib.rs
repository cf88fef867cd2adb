pub mod core_model;
pub mod fixtures;
pub mod milp_builder;
pub mod solver_backend;
pub mod oracle;
pub mod verifier;
pub mod engine;
pub mod instance_io;
pub mod cli;
