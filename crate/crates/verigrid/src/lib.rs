pub mod acquisition;
pub mod autopilot;
pub mod bench;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod grid;
pub mod hyperopt;
pub mod kdpp;
pub mod mrac;
pub mod plot;
pub mod sim;
pub mod stl;
pub mod stl_parse;
pub mod trace;
pub mod verify;
