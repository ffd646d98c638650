//! Static verification of message-passing MiniGo programs.

pub mod checker;
pub mod driver;
pub mod model;
pub mod params;
pub mod promela;
pub mod syntax;
