pub mod asymptotics;
pub mod comb;
pub mod error;
pub mod experiment;
pub mod potential;
pub mod quad;
pub mod realset;
pub mod remez;
pub mod widom;
