pub mod cli;
pub mod error;
pub mod hazard;
pub mod limitchain;
pub mod mc;
pub mod pointproc;
pub mod ram;
pub mod records;
pub mod special;
pub mod stats;
pub mod verify;
