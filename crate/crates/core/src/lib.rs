pub mod crypto;
pub mod params;
pub mod ring;
pub mod cost;
pub mod protocol;
pub mod adversary;
pub mod config;
pub mod harness;
