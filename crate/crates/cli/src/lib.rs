//! Library surface of the batch front end, shared by the binary and the
//! integration tests.

pub mod config;
pub mod pipeline;
pub mod plot;
pub mod report;
