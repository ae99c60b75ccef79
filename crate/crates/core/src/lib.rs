pub mod atomic;
pub mod dynamics;
pub mod exec;
pub mod harness;
pub mod numerics;
pub mod potential;
pub mod units;
pub mod xpm;
