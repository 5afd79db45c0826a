pub mod cli;
pub mod error;
pub mod implied;
pub mod pricing;
pub mod quad;
pub mod shape;
pub mod specialfn;
pub mod vgmodel;
