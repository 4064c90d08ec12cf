pub mod encode;
pub mod gradcheck;
pub mod inspect;
pub mod run;
