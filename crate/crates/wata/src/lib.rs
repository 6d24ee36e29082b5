//! Emptiness checking for one-clock alternating timed automata with a weak
//! (0,1) acceptance condition over non-Zeno timed words.

pub mod ata;
pub mod concrete;
pub mod region;
pub mod orders;
pub mod compressed;
pub mod contexts;
pub mod solver;
pub mod tptl;
pub mod instance_gen;
pub mod report;
pub mod cli;
