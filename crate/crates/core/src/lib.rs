pub mod alphabet;
pub mod error;
pub mod fcm;
pub mod alpha_ml;
pub mod special;
pub mod dependence;
pub mod tuner;
pub mod codec;
pub mod simharness;
pub mod cli;
