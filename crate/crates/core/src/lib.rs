pub mod certify;
pub mod conditions;
pub mod exactlin;
pub mod postnum;
pub mod schemecalc;
pub mod space;
