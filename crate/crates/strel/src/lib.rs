//! Monitoring of spatio-temporal reach/escape specifications over traces
//! of dynamic weighted graphs.

pub mod algebra;
pub mod automaton;
pub mod check;
pub mod logic;
pub mod monitor;
pub mod oracle;
pub mod scenario;
pub mod polynomial;
pub mod spatial;
pub mod trace;
