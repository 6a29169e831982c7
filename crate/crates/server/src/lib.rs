//! HTTP service and command-line front end for the usermap engine.

pub mod cli;
pub mod error;
pub mod routes;
pub mod state;

pub use routes::router;
pub use state::AppState;
