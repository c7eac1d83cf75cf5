//! Influential-broker analytics over follow graphs and retweet cascades:
//! cascade-derived broker and source-spreader scores, centrality
//! baselines, compositional relational node embeddings, top-p% overlap
//! analysis, and a supervised influencer-identification pipeline with
//! cross-network feature transfer.

pub mod cascade;
pub mod centrality;
pub mod embed;
pub mod error;
pub mod graph;
pub mod influence;
pub mod overlap;
pub mod pipeline;
pub mod predict;
pub mod synth;

pub use cascade::{Cascade, CascadeSet};
pub use error::{Error, Result};
pub use graph::{NodeId, SocialGraph};
pub use influence::InfluenceTable;
