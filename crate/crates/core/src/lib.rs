pub mod asymptotics;
pub mod bifurcation;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod roots;
pub mod shooting;
pub mod special;
pub mod verify;

pub use error::{BvpError, Result};
