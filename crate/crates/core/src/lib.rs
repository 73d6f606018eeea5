pub mod formula;
pub mod structures;
pub mod presburger;
pub mod oracle;
pub mod power;
pub mod qfbapa;
pub mod qfbapai;
pub mod cal;
pub mod skolem;
pub mod syntax;
pub mod driver;
pub mod fuzz;
