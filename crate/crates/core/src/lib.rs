pub mod gf;
pub mod designs;
pub mod flatmat;
pub mod frames;
pub mod metrics;
pub mod codes;
