pub mod chainfile;
pub mod fmt;
