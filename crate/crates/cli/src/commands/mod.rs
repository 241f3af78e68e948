pub mod fit;
pub mod marglik;
pub mod report;
pub mod simulate;
