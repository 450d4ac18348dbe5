pub mod backend;
pub mod corpus;
pub mod corruption;
pub mod description;
pub mod metrics;
pub mod prompting;
pub mod retrieval;
pub mod runner;
pub mod text;
