//! Small combinatorial helpers with no knowledge of metric spaces.

pub mod cliques;
pub mod clustering;
pub mod lp;
pub mod union_find;
