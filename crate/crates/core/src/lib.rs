pub mod cli;
pub mod cloze;
pub mod demo;
pub mod finetune;
pub mod pipeline;
pub mod polish;
pub mod sql;
pub mod table;
pub mod template;
pub mod text;
